"""Sparse families, sparse operators and the explicit-constant checks built on them."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateWeightError, DomainError, ParameterError
from .grid import (Cube, DyadicLattice, GridSpec, SampledFunction, block_means, block_sums,
                   canonical_shifts, expand_blocks, lp_norm)
from .maximal import cube_rows, hl_maximal, orlicz_maximal, power_maximal
from .weights import Weight, fujii_wilson_constant
from .young import YoungFunction, luxemburg_rows

__all__ = [
    "SparseFamily",
    "build_sparse_family",
    "verify_sparsity",
    "sparse_operator",
    "sparse_commutator_forms",
    "b_psi_operator",
    "CarlesonResult",
    "carleson_check",
    "lemma47_check",
    "sparse_two_weight_ratio",
    "DominationFit",
    "domination_fit",
    "shifted_families",
    "family_to_json",
    "family_from_json",
]


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """Cubes of one lattice with witness sets given as flat cell indices."""

    lattice: DyadicLattice
    cubes: tuple
    witnesses: tuple
    eta: float

    def __post_init__(self):
        if len(self.cubes) != len(self.witnesses):
            raise ParameterError("one witness set per cube")
        if not 0 < self.eta <= 1:
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta}")
        lid = self.lattice.lattice_id
        for Q in self.cubes:
            if Q.lattice_id != lid:
                raise DomainError("all cubes of a sparse family share one lattice")

    @property
    def grid(self) -> GridSpec:
        return self.lattice.grid

    def __len__(self):
        return len(self.cubes)

    def by_level(self) -> dict:
        """``level -> boolean selection array`` shaped like the lattice level."""
        out = {}
        for Q in self.cubes:
            sel = out.get(Q.level)
            if sel is None:
                sel = out[Q.level] = np.zeros(self.lattice.counts(Q.level), dtype=bool)
            sel[Q.index] = True
        return out


def _parent_index(L: DyadicLattice, k: int) -> np.ndarray:
    """Flat index of each level-``k`` cube's parent, or -1 for roots."""
    counts = L.counts(k)
    if k + 1 > L.grid.max_level or 0 in L.counts(k + 1):
        return np.full(int(np.prod(counts)), -1)
    side, pcounts = 1 << k, L.counts(k + 1)
    per_axis = []
    for o, c, po, pc in zip(L.offsets(k), counts, L.offsets(k + 1), pcounts):
        start = o + np.arange(c) * side
        pi = (start - po) // (2 * side)
        ok = (start >= po) & (pi < pc)
        per_axis.append(np.where(ok, pi, -1))
    grids = np.meshgrid(*per_axis, indexing="ij")
    valid = np.all([g >= 0 for g in grids], axis=0)
    flat = np.ravel_multi_index(tuple(np.maximum(g, 0) for g in grids), pcounts)
    return np.where(valid, flat, -1).ravel()


def build_sparse_family(f: SampledFunction, lattice: DyadicLattice = None,
                        threshold: float = None) -> SparseFamily:
    """Stopping-time family: below each selected cube pick the maximal
    descendants whose ``|f|`` average exceeds ``threshold`` times its own.

    Roots (cubes without a parent in the grid) are always selected.  The
    witness of ``Q`` is ``Q`` minus its selected descendants, so witnesses are
    disjoint and ``eta >= 1 - 1/threshold``.
    """
    L = lattice or DyadicLattice(f.grid)
    if threshold is None:
        threshold = 2.0 if f.grid.dimension == 1 else 4.0
    if not threshold > 1:
        raise ParameterError(f"stopping threshold must exceed 1, got {threshold}")
    a = np.abs(f.values)
    if not np.any(a > 0):
        raise DegenerateWeightError("stopping time needs f not identically zero")

    while True:
        family, owner = _stopping_time(a, L, threshold)
        cubes = tuple(family)
        witnesses = tuple(np.flatnonzero(owner == i) for i in range(len(cubes)))
        eta = min(w.size / Q.ncells for Q, w in zip(cubes, witnesses))
        if eta >= 1 - 1 / threshold - 1e-12:
            return SparseFamily(L, cubes, witnesses, eta)
        threshold *= 2


def _stopping_time(a: np.ndarray, L: DyadicLattice, threshold: float):
    family = []
    owner = np.full(a.shape, -1, dtype=np.int64)
    ref = {}
    for k in reversed(L.levels):
        counts = L.counts(k)
        if 0 in counts:
            continue
        means = block_means(a, L, k).ravel()
        parents = _parent_index(L, k)
        if parents.max() < 0 or (k + 1) not in ref:
            parent_ref = np.full(means.size, np.nan)
        else:
            parent_ref = np.where(parents >= 0, ref[k + 1][np.maximum(parents, 0)], np.nan)
        is_root = np.isnan(parent_ref)
        selected = is_root | (means > threshold * np.nan_to_num(parent_ref, nan=np.inf))
        ref[k] = np.where(selected, means, parent_ref)
        ids = np.full(means.size, -1, dtype=np.int64)
        for flat in np.flatnonzero(selected):
            idx = np.unravel_index(flat, counts)
            ids[flat] = len(family)
            family.append(L.cube(k, idx))
        # deeper selections overwrite, so each cell ends with its deepest selected cube
        expanded = expand_blocks(ids.reshape(counts).astype(float), L, k, fill=-1.0)
        take = expanded >= 0
        owner[take] = expanded[take].astype(np.int64)
    return family, owner


def verify_sparsity(S: SparseFamily):
    """Recompute witness containment, disjointness and fractions from scratch.

    Returns ``(eta_actual, ok)``.
    """
    grid = S.grid
    hits = np.zeros(grid.ncells, dtype=np.int64)
    eta_actual = 1.0
    ok = True
    for Q, wit in zip(S.cubes, S.witnesses):
        wit = np.asarray(wit, dtype=np.int64)
        uniq = np.unique(wit)
        if uniq.size != wit.size:
            ok = False
        if uniq.size and (uniq.min() < 0 or uniq.max() >= grid.ncells):
            return 0.0, False
        cells = np.unravel_index(uniq, grid.shape)
        inside = np.all([(c >= s) & (c < s + Q.side) for c, s in zip(cells, Q.start)], axis=0)
        if uniq.size and not np.all(inside):
            ok = False
        hits[uniq] += 1
        eta_actual = min(eta_actual, uniq.size / Q.ncells)
    if hits.max(initial=0) > 1:
        ok = False
    ok = ok and eta_actual >= S.eta - 1e-12
    return eta_actual, bool(ok)


def _level_sum(S: SparseFamily, per_level) -> np.ndarray:
    """Sum over levels of ``per_level(k, sel)`` (cell arrays) for the family's cubes."""
    out = np.zeros(S.grid.shape)
    for k, sel in sorted(S.by_level().items()):
        out += per_level(k, sel)
    return out


def sparse_operator(S: SparseFamily, f: SampledFunction) -> SampledFunction:
    """``A_S f = sum_{Q in S} <|f|>_Q chi_Q``."""
    if f.grid != S.grid:
        raise DomainError("family and function live on different grids")
    a = np.abs(f.values)
    L = S.lattice

    def part(k, sel):
        return expand_blocks(np.where(sel, block_means(a, L, k), 0.0), L, k, fill=0.0)

    return f.like(_level_sum(S, part), nonnegative=True)


def sparse_commutator_forms(S: SparseFamily, b, f: SampledFunction):
    """``(T_{S,b}|f|, T*_{S,b}|f|)``:

    ``sum_Q |b(x) - b_Q| <|f|>_Q chi_Q(x)`` and
    ``sum_Q <|b - b_Q| |f|>_Q chi_Q(x)``.
    """
    if f.grid != S.grid or b.grid != S.grid:
        raise DomainError("family, symbol and function must share a grid")
    a = np.abs(f.values)
    bv = np.asarray(b.values)
    L = S.lattice

    def direct(k, sel):
        bq = expand_blocks(block_means(bv, L, k), L, k, fill=0.0)
        fq = expand_blocks(np.where(sel, block_means(a, L, k), 0.0), L, k, fill=0.0)
        return np.abs(bv - bq) * fq

    def starred(k, sel):
        B = cube_rows(bv, L, k)
        F = cube_rows(a, L, k)
        osc = np.mean(np.abs(B - B.mean(axis=1, keepdims=True)) * F, axis=1)
        return expand_blocks(np.where(sel, osc.reshape(sel.shape), 0.0), L, k, fill=0.0)

    return (f.like(_level_sum(S, direct), nonnegative=True),
            f.like(_level_sum(S, starred), nonnegative=True))


def b_psi_operator(S: SparseFamily, f: SampledFunction, psi: YoungFunction) -> SampledFunction:
    """``B_S f = sum_Q ||f||_{Psi,Q} chi_Q``."""
    if f.grid != S.grid:
        raise DomainError("family and function live on different grids")
    a = np.abs(f.values)
    L = S.lattice

    def part(k, sel):
        norms = np.zeros(sel.size)
        flat = sel.ravel()
        if flat.any():
            norms[flat] = luxemburg_rows(cube_rows(a, L, k)[flat], psi)
        return expand_blocks(norms.reshape(sel.shape), L, k, fill=0.0)

    return f.like(_level_sum(S, part), nonnegative=True)


def _as_weight(w) -> Weight:
    return w if isinstance(w, Weight) else Weight(w)


def _carleson_constant(S: SparseFamily, wv: np.ndarray, cellvol: float) -> float:
    """``max_{R in S} w(R)^(-1) sum_{Q in S, Q subset R} w(Q)``."""
    L = S.lattice
    density = np.zeros(S.grid.shape)
    best = 0.0
    levels = S.by_level()
    for k in L.levels:
        if 0 in L.counts(k):
            continue
        sel = levels.get(k)
        if sel is not None:
            mass = block_sums(wv, L, k) * cellvol
            per_cell = np.where(sel, mass / (1 << k) ** wv.ndim, 0.0)
            density += expand_blocks(per_cell, L, k, fill=0.0)
            inner = block_sums(density, L, k)
            best = max(best, float(np.max(inner[sel] / mass[sel])))
    return best


class CarlesonResult(NamedTuple):
    a_witness: float
    lhs: float
    rhs: float
    holds: bool
    proof_bound: float
    proof_holds: bool


def carleson_check(S: SparseFamily, w, f: SampledFunction, p: float) -> CarlesonResult:
    """Dyadic Carleson embedding with ``a_Q = w(Q)`` on the family.

    ``lhs = (sum_Q w(Q) (w(Q)^(-1) int_Q |f| w)^p)^(1/p)`` against
    ``A^(1/p) p' ||f||_{L^p(w)}``; also checks ``A <= [w]_{A_inf} / eta``
    with the Fujii-Wilson constant taken on the family's lattice.
    """
    if not p > 1:
        raise ParameterError("p must exceed 1")
    w = _as_weight(w)
    if w.grid != S.grid or f.grid != S.grid:
        raise DomainError("family, weight and function must share a grid")
    wv, cv = w.values, S.grid.cell_volume
    A = _carleson_constant(S, wv, cv)
    fw = np.abs(f.values) * wv
    total = 0.0
    for k, sel in S.by_level().items():
        mass = block_sums(wv, S.lattice, k)[sel] * cv
        if np.any(mass <= 0):
            raise DegenerateWeightError("w(Q) = 0 on a family cube")
        num = block_sums(fw, S.lattice, k)[sel] * cv
        total += float(np.sum(mass * (num / mass) ** p))
    lhs = total ** (1.0 / p)
    pp = p / (p - 1)
    rhs = A ** (1.0 / p) * pp * lp_norm(f, w.base, p)
    bound = fujii_wilson_constant(w, S.lattice) / S.eta
    return CarlesonResult(A, lhs, rhs, bool(lhs <= rhs * (1 + 1e-9)), bound,
                          bool(A <= bound * (1 + 1e-12)))


def lemma47_check(S: SparseFamily, w, f: SampledFunction, psi: YoungFunction):
    """``||B_S f||_{L^1(w)}`` against ``(4/eta) [w]_{A_inf} ||M_Psi f||_{L^1(w)}``.

    Returns ``(lhs, rhs, holds)``; every maximal function and constant uses
    the family's lattice.
    """
    w = _as_weight(w)
    cv = S.grid.cell_volume
    lhs = float(np.sum(b_psi_operator(S, f, psi).values * w.values) * cv)
    mpsi = orlicz_maximal(f, psi, S.lattice)
    rhs = 4.0 / S.eta * fujii_wilson_constant(w, S.lattice) * float(np.sum(mpsi.values * w.values) * cv)
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-9))


def sparse_two_weight_ratio(S: SparseFamily, g: SampledFunction, w, p: float, r: float) -> float:
    """``||A_S g|| / (p' ||M g||)`` in ``L^{p'}((M_r w)^{1-p'})``."""
    w = _as_weight(w)
    pp = p / (p - 1)
    v = power_maximal(w.base, r, S.lattice).values ** (1 - pp)
    vw = g.like(v, nonnegative=True)
    num = lp_norm(sparse_operator(S, g), vw, pp)
    den = pp * lp_norm(hl_maximal(g, S.lattice), vw, pp)
    return num / den if den > 0 else 0.0


def shifted_families(f: SampledFunction, threshold: float = None) -> list:
    """One stopping-time family per shifted lattice, all driven by ``|f|``."""
    grid = f.grid
    return [build_sparse_family(f, DyadicLattice(grid, s), threshold)
            for s in canonical_shifts(grid.dimension)]


class DominationFit(NamedTuple):
    c_fit: float
    max_cell: tuple
    violations: int
    median_ratio: float


def domination_fit(f: SampledFunction, direct: SampledFunction,
                   families: Sequence[SparseFamily], b=None, tol: float = 1e-9) -> DominationFit:
    """Smallest ``c`` with ``|direct| <= c sum_j A_{S_j} f`` cellwise.

    With a symbol ``b`` the dominating sum is ``sum_j (T_{S_j,b} + T*_{S_j,b})|f|``.
    Cells where the sum vanishes but ``|direct| > tol ||direct||_inf`` count
    as violations; below that level they are skipped.
    """
    num = np.abs(direct.values)
    den = np.zeros(f.grid.shape)
    for S in families:
        if b is None:
            den += sparse_operator(S, f).values
        else:
            t1, t2 = sparse_commutator_forms(S, b, f)
            den += t1.values + t2.values
    scale = float(num.max(initial=0.0))
    if scale == 0:
        return DominationFit(0.0, (), 0, 0.0)
    zero = den <= 0
    violations = int(np.sum(zero & (num > tol * scale)))
    ratio = np.where(zero, 0.0, num / np.where(zero, 1.0, den))
    cell = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return DominationFit(float(ratio.max()), tuple(int(c) for c in cell), violations,
                         float(np.median(ratio[~zero])) if np.any(~zero) else 0.0)


def _runs(idx: np.ndarray) -> list:
    idx = np.sort(np.asarray(idx, dtype=np.int64))
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    stops = np.concatenate([idx[breaks], [idx[-1]]]) + 1
    return [[int(a), int(b)] for a, b in zip(starts, stops)]


def family_to_json(S: SparseFamily) -> str:
    """Cubes, witness runs of flat cell indices ``[start, stop)``, and ``eta``."""
    data = {
        "grid": S.grid.to_dict(),
        "shift": list(S.lattice.shift),
        "eta": S.eta,
        "cubes": [{"level": Q.level, "index": list(Q.index), "witness": _runs(W)}
                  for Q, W in zip(S.cubes, S.witnesses)],
    }
    return json.dumps(data, sort_keys=True)


def family_from_json(text: str) -> SparseFamily:
    data = json.loads(text)
    g = data["grid"]
    grid = GridSpec(g["dimension"], g["bounds"], g["resolution"])
    L = DyadicLattice(grid, tuple(data["shift"]))
    cubes, wits = [], []
    for entry in data["cubes"]:
        cubes.append(L.cube(entry["level"], entry["index"]))
        runs = entry["witness"]
        wits.append(np.concatenate([np.arange(a, b) for a, b in runs]) if runs
                    else np.zeros(0, dtype=np.int64))
    return SparseFamily(L, tuple(cubes), tuple(wits), float(data["eta"]))
