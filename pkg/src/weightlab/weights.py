"""Weight characteristics, BMO norms, and weight/symbol generators.

All constants are suprema over the cubes of a scope (see :mod:`.grid`).
They are scale invariant, equal 1 for constant weights, and satisfy
``[w]_{A_p} <= [w]_{A_1}`` and ``[w]_{A_inf} >= 1`` on a fixed lattice.
"""
from __future__ import annotations

import itertools
import warnings
from typing import NamedTuple

import numpy as np

from .errors import DegenerateWeightError, DomainError, NumericError, ParameterError
from .grid import GridSpec, SampledFunction, block_means, block_sums, resolve_scope, scope_key
from .maximal import cube_rows, hl_maximal

__all__ = [
    "Weight",
    "BmoSymbol",
    "RHIResult",
    "ap_constant",
    "a1_constant",
    "fujii_wilson_constant",
    "rhi_check",
    "bmo_norm",
    "exp_symbol_ap",
    "make_weight",
    "make_symbol",
]


class Weight:
    """Strictly positive sampled weight with write-once constant caches."""

    def __init__(self, base):
        if not isinstance(base, SampledFunction):
            raise TypeError("Weight wraps a SampledFunction")
        if np.any(base.values < 0):
            raise ParameterError("weights are nonnegative")
        if not np.any(base.values > 0):
            raise DegenerateWeightError("weight vanishes identically")
        self.base = base if base.nonnegative else base.like(base.values, nonnegative=True)
        self._cache = {}

    @property
    def grid(self) -> GridSpec:
        return self.base.grid

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def cached(self, key, compute):
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]

    def scaled(self, c: float) -> "Weight":
        return Weight(self.base.scaled(c))

    def __repr__(self):
        return f"Weight(grid={self.grid.resolution}, cached={sorted(map(str, self._cache))})"


class BmoSymbol:
    """Real symbol ``b`` with a cached BMO norm per scope."""

    def __init__(self, base: SampledFunction):
        self.base = base
        self._norms = {}

    @property
    def grid(self) -> GridSpec:
        return self.base.grid

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def norm(self, scope="dyadic") -> float:
        key = scope_key(self.grid, scope)
        if key not in self._norms:
            self._norms[key] = _bmo(self.values, self.grid, scope)
        return self._norms[key]

    def normalized(self, scope="dyadic") -> "BmoSymbol":
        nrm = self.norm(scope)
        if nrm == 0:
            raise ParameterError("cannot normalise a constant symbol")
        return BmoSymbol(self.base.scaled(1.0 / nrm))


def _as_weight(w) -> Weight:
    return w if isinstance(w, Weight) else Weight(w)


def _require_positive(w: Weight):
    if np.any(w.values <= 0):
        raise DegenerateWeightError("weight has zero cells; dual averages diverge")


def _cube_max(values_list, grid, scope, stat) -> float:
    best = -np.inf
    for L in resolve_scope(grid, scope):
        for k in L.levels:
            if 0 in L.counts(k):
                continue
            means = [block_means(v, L, k) for v in values_list]
            best = max(best, float(np.max(stat(*means))))
    return best


def ap_constant(w, p: float, scope="dyadic") -> float:
    """``sup_Q avg_Q(w) avg_Q(w^(-1/(p-1)))^(p-1)``."""
    if not p > 1:
        raise ParameterError(f"A_p needs p > 1, got {p}")
    w = _as_weight(w)

    def compute():
        _require_positive(w)
        dual = w.values ** (-1.0 / (p - 1))
        return _cube_max([w.values, dual], w.grid, scope,
                         lambda a, d: a * d ** (p - 1))

    return w.cached(("ap", float(p), scope_key(w.grid, scope)), compute)


def a1_constant(w, scope="dyadic") -> float:
    """Discrete ess-sup of ``M w / w``."""
    w = _as_weight(w)

    def compute():
        _require_positive(w)
        return float(np.max(hl_maximal(w.base, scope).values / w.values))

    return w.cached(("a1", scope_key(w.grid, scope)), compute)


def _fw_single(values: np.ndarray, L) -> float:
    if np.any(values <= 0):
        raise DegenerateWeightError("w(Q) = 0 for a single-cell cube")
    # Running max of ancestors' averages equals M(chi_Q w) on Q for nested cubes.
    running = values.astype(float).copy()
    best = 1.0
    for k in L.levels:
        if k == 0:
            continue
        counts = L.counts(k)
        if 0 in counts:
            continue
        side = 1 << k
        means = block_means(values, L, k)
        big = means
        for axis in range(values.ndim):
            big = np.repeat(big, side, axis=axis)
        region = L.region(k)
        running[region] = np.maximum(running[region], big)
        mass = block_sums(values, L, k)
        if np.any(mass <= 0):
            raise DegenerateWeightError("w(Q) = 0 for an in-scope cube")
        best = max(best, float(np.max(block_sums(running, L, k) / mass)))
    return best


def _fw_union(w: Weight, lattices) -> float:
    # For x in Q, M(chi_Q w)(x) = max over cubes R containing x of w(Q & R)/|R|.
    # Q & R is a box, so every such value is four (2^n) prefix-sum lookups, and
    # for a fixed tiling of Q and a fixed tiling of R it vectorises over cells.
    v = w.values
    n, shape = v.ndim, v.shape
    P = np.zeros(tuple(r + 1 for r in shape))
    P[(slice(1, None),) * n] = v
    for axis in range(n):
        P = np.cumsum(P, axis=axis)

    def tiling(L, k):
        side = 1 << k
        starts, ok = [], []
        for r, o, c in zip(shape, L.offsets(k), L.counts(k)):
            i = np.floor_divide(np.arange(r) - o, side)
            ok.append((i >= 0) & (i < c))
            starts.append(o + i * side)
        return side, starts, ok

    tilings = [tiling(L, k) for L in lattices for k in L.levels if 0 not in L.counts(k)]
    best = 1.0
    for L in lattices:
        for k in L.levels:
            if 0 in L.counts(k):
                continue
            qside, qstart, qok = tiling(L, k)
            m = np.zeros(shape)
            for rside, rstart, rok in tilings:
                lo = [np.maximum(a, b) for a, b in zip(qstart, rstart)]
                hi = [np.minimum(a + qside, b + rside) for a, b in zip(qstart, rstart)]
                ok = [qa & ra for qa, ra in zip(qok, rok)]
                lo = [np.where(o, a, 0) for a, o in zip(lo, ok)]
                hi = [np.where(o, b, 0) for b, o in zip(hi, ok)]
                box = np.zeros(shape)
                for corner in itertools.product((0, 1), repeat=n):
                    idx = np.ix_(*[hi[d] if c else lo[d] for d, c in enumerate(corner)])
                    box += (-1) ** (n - sum(corner)) * P[idx]
                m = np.maximum(m, box / rside ** n)
            mass = block_sums(v, L, k)
            if np.any(mass <= 0):
                raise DegenerateWeightError("w(Q) = 0 for an in-scope cube")
            best = max(best, float(np.max(block_sums(m, L, k) / mass)))
    return best


def fujii_wilson_constant(w, scope="dyadic") -> float:
    """``sup_Q w(Q)^(-1) int_Q M(chi_Q w)`` with the inner ``M`` on the same scope.

    A single lattice costs ``O(N log N)``.  A union of ``m`` lattices costs
    ``O((m log N)^2 N)`` through prefix sums of ``w``, whose cancellation error
    is relative to ``w`` of the whole grid rather than of the cube.
    """
    w = _as_weight(w)
    lattices = resolve_scope(w.grid, scope)

    def compute():
        if len(lattices) == 1:
            return _fw_single(w.values, lattices[0])
        return _fw_union(w, lattices)

    return w.cached(("ainf", scope_key(w.grid, scope)), compute)


class RHIResult(NamedTuple):
    r_w: float
    worst_ratio: float
    holds: bool


def rhi_check(w, tau: float = None, scope="dyadic") -> RHIResult:
    """Reverse Hoelder with exponent ``1 + 1/(tau [w]_{A_inf})`` and constant 2."""
    if tau is None:
        from .registry import load_registry
        tau = load_registry()["tau"]
    if not tau > 0:
        raise ParameterError("tau must be positive")
    w = _as_weight(w)
    r = 1.0 + 1.0 / (tau * fujii_wilson_constant(w, scope))
    worst = _cube_max([w.values ** r, w.values], w.grid, scope,
                      lambda a, m: a ** (1.0 / r) / m)
    return RHIResult(r, worst, bool(worst <= 2.0 + 1e-9))


def _bmo(values: np.ndarray, grid, scope) -> float:
    best = 0.0
    for L in resolve_scope(grid, scope):
        for k in L.levels:
            B = cube_rows(values, L, k)
            if B.shape[0] == 0 or k == 0:
                continue
            osc = np.mean(np.abs(B - B.mean(axis=1, keepdims=True)), axis=1)
            best = max(best, float(osc.max()))
    return best


def bmo_norm(b, scope="dyadic") -> float:
    """``sup_Q avg_Q |b - b_Q|``."""
    if isinstance(b, BmoSymbol):
        return b.norm(scope)
    return _bmo(b.values, b.grid, scope)


def exp_symbol_ap(b, s: float, p: float, scope="dyadic") -> float:
    """A_p constant of ``exp(s b)``."""
    values = s * np.asarray(b.values)
    if np.max(np.abs(values)) > 700:
        raise NumericError(f"exp(s b) overflows for s={s}")
    base = SampledFunction(b.grid, np.exp(values), nonnegative=True)
    return ap_constant(Weight(base), p, scope)


def _clamp(values: np.ndarray) -> np.ndarray:
    floor = 1e-12 * float(np.mean(values))
    return np.maximum(values, floor)


def make_weight(kind: str, params: dict = None, grid: GridSpec = None, p: float = None) -> Weight:
    """Build a weight of ``kind``: constant, power, step, or lognormal.

    ``power`` samples ``|x|^alpha`` at cell centers; with ``p`` given it warns
    when ``alpha`` leaves ``(-n, n(p-1))``, where the weight stops being A_p.
    """
    params = dict(params or {})
    if grid is None:
        raise ParameterError("make_weight needs a grid")
    n = grid.dimension
    if kind == "constant":
        c = float(params.get("value", params.get("c", 1.0)))
        if not c > 0:
            raise ParameterError("constant weight must be positive")
        values = np.full(grid.shape, c)
    elif kind == "power":
        alpha = float(params["alpha"])
        if not alpha > -n:
            raise ParameterError(f"power weight needs alpha > -{n}, got {alpha}")
        if p is not None and not (-n < alpha < n * (p - 1)):
            warnings.warn(f"|x|^{alpha} is not an A_{p} weight", stacklevel=2)
        rad = grid.radius()
        if np.any(rad == 0):
            raise DomainError("a cell center sits at the origin")
        values = rad ** alpha
    elif kind == "step":
        levels = np.asarray(params["levels"], dtype=float)
        if levels.size == 0 or np.any(levels <= 0):
            raise ParameterError("step levels must be positive")
        m = grid.resolution[0]
        idx = (np.arange(m) * levels.size) // m
        profile = levels[idx]
        values = np.broadcast_to(profile.reshape((m,) + (1,) * (n - 1)), grid.shape).copy()
    elif kind == "lognormal":
        sigma = float(params.get("sigma", 1.0))
        if not sigma >= 0:
            raise ParameterError("sigma must be nonnegative")
        rng = np.random.default_rng(int(params.get("seed", 0)))
        values = np.exp(sigma * rng.standard_normal(grid.shape))
    else:
        raise ParameterError(f"unknown weight kind {kind!r}")
    return Weight(SampledFunction(grid, _clamp(values), nonnegative=True))


def make_symbol(kind: str, params: dict = None, grid: GridSpec = None) -> BmoSymbol:
    """BMO test symbols: constant, linear (first coordinate), log (log|x|), step, random."""
    params = dict(params or {})
    if grid is None:
        raise ParameterError("make_symbol needs a grid")
    if kind == "constant":
        values = np.full(grid.shape, float(params.get("value", 1.0)))
    elif kind == "linear":
        values = float(params.get("slope", 1.0)) * grid.centers()[0]
    elif kind == "log":
        rad = grid.radius()
        if np.any(rad == 0):
            raise DomainError("a cell center sits at the origin")
        values = np.log(rad)
    elif kind == "step":
        levels = np.asarray(params["levels"], dtype=float)
        m = grid.resolution[0]
        profile = levels[(np.arange(m) * levels.size) // m]
        values = np.broadcast_to(profile.reshape((m,) + (1,) * (grid.dimension - 1)),
                                 grid.shape).copy()
    elif kind == "random":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        values = float(params.get("sigma", 1.0)) * rng.standard_normal(grid.shape)
    else:
        raise ParameterError(f"unknown symbol kind {kind!r}")
    symbol = BmoSymbol(SampledFunction(grid, values))
    if params.get("normalize", False):
        symbol = symbol.normalized()
    return symbol
