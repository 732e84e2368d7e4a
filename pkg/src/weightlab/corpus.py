"""Seeded test functions and the corpus runs behind the explicit-constant lemmas.

Each ``verify_*`` function returns a list of :class:`CheckRow`; a row holds
when ``lhs <= rhs * (1 + tol)``.  The row format matches the ratio reports of
:mod:`.harness`, so both end up in the same CSV layout.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .grid import DyadicLattice, GridSpec, SampledFunction, canonical_shifts, lp_norm
from .maximal import (hl_maximal, orlicz_maximal, power_maximal, rubio_de_francia,
                      mean_oscillation_ratio)
from .sparse import (build_sparse_family, carleson_check, lemma47_check,
                     sparse_two_weight_ratio, verify_sparsity)
from .weights import Weight, make_symbol, make_weight, rhi_check, a1_constant
from .young import identity, llogl

__all__ = [
    "make_function",
    "CheckRow",
    "CorpusCase",
    "lemma_corpus",
    "verify_rhi",
    "verify_desig",
    "verify_carleson",
    "verify_sparse_orlicz",
    "verify_rubio",
    "sparse_two_weight_ratios",
    "john_nirenberg_ratios",
    "LEMMAS",
]


def make_function(kind: str, params: dict = None, grid: GridSpec = None) -> SampledFunction:
    """Test functions: bump, step, zero, constant, lognormal.

    ``bump`` is ``(1 - |x-c|^2/h^2)_+^2``; with a ``seed`` and no explicit
    ``center``/``width`` both are drawn from the seed.  ``step`` draws eight
    signed levels on consecutive slabs of ``[-3/4, 3/4)`` along the first axis.
    """
    params = dict(params or {})
    if grid is None:
        raise ParameterError("make_function needs a grid")
    rng = np.random.default_rng(int(params.get("seed", 0)))
    x = grid.centers()
    if kind == "bump":
        c = params.get("center")
        c = rng.uniform(-0.5, 0.5, grid.dimension) if c is None else np.atleast_1d(c)
        h = params.get("width")
        h = rng.uniform(0.05, 0.3) if h is None else float(h)
        r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / h ** 2
        values = np.where(r2 < 1, (1 - r2) ** 2, 0.0) * float(params.get("amplitude", 1.0))
    elif kind == "step":
        pieces = int(params.get("pieces", 8))
        levels = rng.uniform(-1.0, 1.0, pieces)
        edges = np.linspace(-0.75, 0.75, pieces + 1)
        idx = np.searchsorted(edges, x[0], side="right") - 1
        inside = (idx >= 0) & (idx < pieces)
        values = np.where(inside, levels[np.clip(idx, 0, pieces - 1)], 0.0)
    elif kind == "zero":
        values = np.zeros(grid.shape)
    elif kind == "constant":
        values = np.full(grid.shape, float(params.get("value", 1.0)))
    elif kind == "lognormal":
        values = np.exp(float(params.get("sigma", 1.0)) * rng.standard_normal(grid.shape))
    else:
        raise ParameterError(f"unknown function kind {kind!r}")
    return SampledFunction(grid, values)


class CheckRow(NamedTuple):
    case: str
    lhs: float
    rhs: float
    holds: bool
    extra: dict


class CorpusCase(NamedTuple):
    name: str
    w: Weight
    f: SampledFunction
    lattice: DyadicLattice
    psi_name: str


_WEIGHT_KINDS = ("lognormal", "power", "step")


def _corpus_weight(i: int, grid: GridSpec, seed: int) -> Weight:
    rng = np.random.default_rng(seed)
    kind = _WEIGHT_KINDS[i % 3]
    if kind == "lognormal":
        return make_weight("lognormal", {"sigma": rng.uniform(0.3, 1.5), "seed": seed}, grid)
    if kind == "power":
        return make_weight("power", {"alpha": rng.uniform(-0.9, 0.9)}, grid)
    return make_weight("step", {"levels": rng.uniform(0.1, 10.0, rng.integers(2, 9))}, grid)


def _corpus_function(i: int, grid: GridSpec, seed: int) -> SampledFunction:
    kind = ("bump", "step", "lognormal")[(i // 3) % 3]
    f = make_function(kind, {"seed": seed, "sigma": 1.0}, grid)
    return abs(f) if np.any(f.values != 0) else make_function("constant", {}, grid)


def lemma_corpus(n_cases: int = 120, resolution: int = 256, dimension: int = 1,
                 seed: int = 0) -> list:
    """Seeded ``(w, f, lattice, Psi)`` combinations cycling through weight,
    function and Young-function kinds and all shifted lattices."""
    grid = GridSpec.uniform(dimension, resolution)
    shifts = canonical_shifts(dimension)
    cases = []
    for i in range(n_cases):
        s = seed * 100003 + i
        w = _corpus_weight(i, grid, s)
        f = _corpus_function(i, grid, s + 7919)
        L = DyadicLattice(grid, shifts[i % len(shifts)])
        psi = ("identity", "llogl:1")[i % 2]
        cases.append(CorpusCase(f"case{i:03d}", w, f, L, psi))
    return cases


def _holds(lhs, rhs, tol=1e-9):
    return bool(lhs <= rhs * (1 + tol))


def verify_rhi(cases, tau: float = None) -> list:
    rows = []
    for c in cases:
        r = rhi_check(c.w, tau, "dyadic")
        rows.append(CheckRow(c.name, r.worst_ratio, 2.0, r.holds, {"r_w": r.r_w}))
    return rows


def verify_desig(cases, rs=(1.5, 2.0, 4.0)) -> list:
    """``M f <= M_{L log L} f <= r' M_r f`` cellwise; lhs is the worst cell ratio."""
    psi = llogl(1.0)
    rows = []
    for c in cases:
        f = c.f
        m = hl_maximal(f).values
        ml = orlicz_maximal(f, psi).values
        first = float(np.max(m / np.where(ml > 0, ml, np.inf)))
        rows.append(CheckRow(f"{c.name}:M<=MLlogL", first, 1.0, _holds(first, 1.0), {}))
        for r in rs:
            mr = power_maximal(f, r).values
            rp = r / (r - 1)
            second = float(np.max(ml / np.where(mr > 0, rp * mr, np.inf)))
            rows.append(CheckRow(f"{c.name}:MLlogL<=r'Mr:r={r:g}", second, 1.0,
                                 _holds(second, 1.0), {"r": r}))
    return rows


def _family(c: CorpusCase):
    S = build_sparse_family(c.f, c.lattice)
    eta, ok = verify_sparsity(S)
    if not ok:
        raise AssertionError(f"{c.name}: stopping-time family is not sparse")
    return S


def verify_carleson(cases, p: float = 2.0) -> list:
    rows = []
    for c in cases:
        S = _family(c)
        res = carleson_check(S, c.w, c.f, p)
        rows.append(CheckRow(c.name, res.lhs, res.rhs, res.holds and res.proof_holds,
                             {"a_witness": res.a_witness, "proof_bound": res.proof_bound,
                              "eta": S.eta, "cubes": len(S)}))
    return rows


def verify_sparse_orlicz(cases) -> list:
    rows = []
    for c in cases:
        S = _family(c)
        psi = identity() if c.psi_name == "identity" else llogl(1.0)
        lhs, rhs, holds = lemma47_check(S, c.w, c.f, psi)
        rows.append(CheckRow(f"{c.name}:{c.psi_name}", lhs, rhs, holds, {"eta": S.eta}))
    return rows


def verify_rubio(cases, p: float = 2.0, r: float = 2.0, norm_factor: float = 1.0) -> list:
    """Properties (a) ``h <= R h`` and (b) ``||R h|| <= 2 ||h||`` in ``L^p(M_r w)``.

    ``norm_factor`` scales the Doob bound used for ``||S||``.
    """
    rows = []
    pp = p / (p - 1)
    for c in cases:
        h = c.f
        R = rubio_de_francia(h, c.w.base, p, r, norm_bound=norm_factor * pp)
        ratio = np.where(R.values > 0, h.values / np.where(R.values > 0, R.values, 1.0), 0.0)
        a = float(ratio.max())
        rows.append(CheckRow(f"{c.name}:a", a, 1.0, _holds(a, 1.0, 0.0), {}))
        v = power_maximal(c.w.base, r)
        lhs, rhs = lp_norm(R, v, p), 2.0 * lp_norm(h, v, p)
        a1 = a1_constant(Weight(R.like(R.values * v.values ** (1.0 / p), nonnegative=True)))
        rows.append(CheckRow(f"{c.name}:b", lhs, rhs, _holds(lhs, rhs), {"a1": a1}))
    return rows


def sparse_two_weight_ratios(cases, p: float = 2.0, r: float = 2.0) -> list:
    """Fitted-constant shape ``||A_S g|| <= C p' ||M g||`` in ``L^{p'}((M_r w)^{1-p'})``."""
    rows = []
    for c in cases:
        S = _family(c)
        ratio = sparse_two_weight_ratio(S, c.f, c.w, p, r)
        rows.append(CheckRow(c.name, ratio, 1.0, True, {}))
    return rows


def john_nirenberg_ratios(cases) -> list:
    """``avg_Q |b - b_Q| |f|`` over ``||f||_{L log L, Q}`` for unit-BMO symbols."""
    grid = cases[0].f.grid
    symbols = [make_symbol("linear", {"normalize": True}, grid),
               make_symbol("log", {"normalize": True}, grid),
               make_symbol("random", {"seed": 3, "normalize": True}, grid)]
    rows = []
    for c in cases:
        for k, b in enumerate(symbols):
            ratio = mean_oscillation_ratio(b.base, c.f)
            rows.append(CheckRow(f"{c.name}:b{k}", ratio, 1.0, True, {}))
    return rows


# lemma id -> (runner, asserted)
LEMMAS = {
    "rhi": (verify_rhi, True),
    "desig": (verify_desig, True),
    "carleson": (verify_carleson, True),
    "sparse-orlicz": (verify_sparse_orlicz, True),
    "rubio": (verify_rubio, True),
    "sparse-two-weight": (sparse_two_weight_ratios, False),
    "john-nirenberg": (john_nirenberg_ratios, False),
}
