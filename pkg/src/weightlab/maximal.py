"""Maximal operators over dyadic scopes and the Rubio de Francia iteration.

Every supremum runs over whole cubes of the lattices in ``scope``
(``"dyadic"``: the standard lattice; ``"full"``: all ``3**n`` shifted
lattices).  Single cells are always in scope, so ``M f >= |f|``.
The sweep is bottom-up per lattice and costs ``O(N log N)``.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateWeightError, DomainError, NumericError, ParameterError
from .grid import (Cube, SampledFunction, block_means, expand_blocks, lp_norm,
                   resolve_scope)
from .young import YoungFunction, complementary_young, llogl, luxemburg_rows

__all__ = [
    "cube_rows",
    "dyadic_sup",
    "hl_maximal",
    "power_maximal",
    "iterated_maximal",
    "luxemburg_norm",
    "orlicz_maximal",
    "generalized_holder_check",
    "rubio_de_francia",
    "mean_oscillation_ratio",
]


def cube_rows(values: np.ndarray, lattice, level: int) -> np.ndarray:
    """Cells of every cube at ``level`` as rows, cubes in C order."""
    side = 1 << level
    counts = lattice.counts(level)
    n = values.ndim
    if 0 in counts:
        return np.zeros((0, side ** n))
    sub = values[lattice.region(level)]
    shape = []
    for c in counts:
        shape += [c, side]
    sub = sub.reshape(shape)
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return sub.transpose(order).reshape(int(np.prod(counts)), side ** n)


def dyadic_sup(values: np.ndarray, grid, scope, cube_stat) -> np.ndarray:
    """Pointwise sup over in-scope cubes of ``cube_stat(values, lattice, level)``.

    ``cube_stat`` returns one number per cube, shaped ``lattice.counts(level)``.
    """
    out = np.full(grid.shape, -np.inf)
    for L in resolve_scope(grid, scope):
        for k in L.levels:
            counts = L.counts(k)
            if 0 in counts:
                continue
            stat = np.asarray(cube_stat(values, L, k)).reshape(counts)
            np.maximum(out, expand_blocks(stat, L, k, fill=-np.inf), out=out)
    return out


def _mean_stat(values, L, k):
    return block_means(values, L, k)


def hl_maximal(f: SampledFunction, scope="dyadic") -> SampledFunction:
    """Dyadic Hardy-Littlewood maximal function of ``|f|``."""
    out = dyadic_sup(np.abs(f.values), f.grid, scope, _mean_stat)
    return f.like(out, nonnegative=True)


def power_maximal(f: SampledFunction, r: float, scope="dyadic") -> SampledFunction:
    """``M_r f = M(|f|^r)^(1/r)``."""
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r}")
    if r == 1:
        return hl_maximal(f, scope)
    out = dyadic_sup(np.abs(f.values) ** r, f.grid, scope, _mean_stat)
    return f.like(out ** (1.0 / r), nonnegative=True)


def iterated_maximal(f: SampledFunction, k: int, scope="dyadic") -> SampledFunction:
    if int(k) != k or k < 1:
        raise ParameterError(f"iteration count must be an integer >= 1, got {k}")
    g = f
    for _ in range(int(k)):
        g = hl_maximal(g, scope)
    return g


def luxemburg_norm(f: SampledFunction, Q: Cube, psi: YoungFunction,
                   rtol: float = 1e-13) -> float:
    """``inf{lam > 0 : avg_Q Psi(|f|/lam) <= 1}``; zero when ``f`` vanishes on ``Q``."""
    for s, r in zip(Q.start, f.grid.resolution):
        if s < 0 or s + Q.side > r:
            raise DomainError(f"cube at {Q.start} leaves the grid")
    row = np.abs(f.values[Q.slices]).ravel()
    return float(luxemburg_rows(row, psi, rtol)[0])


def orlicz_maximal(f: SampledFunction, psi: YoungFunction, scope="dyadic",
                   rtol: float = 1e-13) -> SampledFunction:
    """``sup_{Q containing x} ||f||_{Psi,Q}``."""

    def stat(values, L, k):
        return luxemburg_rows(cube_rows(values, L, k), psi, rtol)

    out = dyadic_sup(np.abs(f.values), f.grid, scope, stat)
    return f.like(out, nonnegative=True)


def generalized_holder_check(f: SampledFunction, g: SampledFunction, Q: Cube,
                             psi: YoungFunction):
    """``avg_Q |f g|`` against ``2 ||f||_{Psi,Q} ||g||_{bar Psi,Q}``.

    Returns ``(lhs, rhs, holds)``.
    """
    if f.grid != g.grid:
        raise DomainError("f and g live on different grids")
    lhs = float(np.mean(np.abs(f.values[Q.slices] * g.values[Q.slices])))
    rhs = 2.0 * luxemburg_norm(f, Q, psi) * luxemburg_norm(g, Q, complementary_young(psi),
                                                            rtol=1e-10)
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-8))


def rubio_de_francia(h: SampledFunction, w: SampledFunction, p: float, r: float,
                     tol: float = 1e-12, scope="dyadic", norm_bound: float = None,
                     max_terms: int = 200) -> SampledFunction:
    """Geometric series ``sum_k S^k h / (2 ||S||)^k`` with
    ``S f = M(f v^(1/p)) / v^(1/p)`` and ``v = M_r w``.

    ``||S||`` on ``L^p(v)`` equals the norm of ``M`` on unweighted ``L^p``,
    which Doob's inequality bounds by ``p'`` per lattice; the default bound is
    ``len(lattices) * p'``.  Any valid upper bound keeps ``||R h|| <= 2 ||h||``.
    """
    if not (p > 1 and r > 1):
        raise ParameterError(f"need p > 1 and r > 1, got p={p}, r={r}")
    if h.grid != w.grid:
        raise DomainError("h and w live on different grids")
    if np.any(h.values < 0) or np.any(w.values < 0):
        raise ParameterError("h and w must be nonnegative")
    lattices = resolve_scope(h.grid, scope)
    if norm_bound is None:
        norm_bound = len(lattices) * p / (p - 1)
    v = power_maximal(w, r, lattices)
    if np.any((v.values <= 0) & (h.values > 0)):
        raise DegenerateWeightError("M_r w vanishes where h is positive")
    root = np.where(v.values > 0, v.values, 1.0) ** (1.0 / p)

    h_norm = lp_norm(h, v, p)
    total = h.values.copy()
    if h_norm == 0:
        return h.like(total, nonnegative=True)
    term = h.values.copy()
    for _ in range(max_terms):
        term = hl_maximal(h.like(term * root), lattices).values / root
        term /= 2.0 * norm_bound
        total += term
        if lp_norm(h.like(term), v, p) < tol * h_norm:
            return h.like(total, nonnegative=True)
    raise NumericError(f"Rubio de Francia series did not reach tol={tol} in {max_terms} terms")


def mean_oscillation_ratio(b: SampledFunction, f: SampledFunction, scope="dyadic") -> float:
    """``max_Q avg_Q(|b - b_Q| |f|) / ||f||_{L log L, Q}`` over cubes where ``f`` is nonzero."""
    if b.grid != f.grid:
        raise DomainError("b and f live on different grids")
    psi = llogl(1.0)
    best = 0.0
    for L in resolve_scope(f.grid, scope):
        for k in L.levels:
            B = cube_rows(b.values, L, k)
            if B.shape[0] == 0:
                continue
            F = np.abs(cube_rows(f.values, L, k))
            osc = np.mean(np.abs(B - B.mean(axis=1, keepdims=True)) * F, axis=1)
            norms = luxemburg_rows(F, psi)
            ok = norms > 0
            if ok.any():
                best = max(best, float(np.max(osc[ok] / norms[ok])))
    return best
