"""Rough homogeneous singular integrals on grids and their dyadic decomposition.

``T_Omega`` is a truncated discrete convolution with ``Omega(y')/|y|^n``.
The kernel splits into dyadic shells ``2^k <= |y| < 2^(k+1)`` (operators
``T_k``), and the pieces

    piece_0 = sum_k T_k S_k,
    piece_j = sum_k T_k (S_{k-N(j)} - S_{k-N(j-1)}),   N(j) = 2^j,

telescope back to ``T_Omega``: a smoothing ``S_m`` whose support is below one
cell collapses to the identity, so ``sum_{j<=J} piece_j`` is exact once
``N(J)`` pushes every ``S_{k-N(J)}`` under the grid floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy import signal
from scipy.integrate import trapezoid

from .errors import DomainError, KernelError, NumericError, ParameterError, ResolutionError
from .grid import GridSpec, SampledFunction

__all__ = [
    "KernelSpec",
    "hilbert",
    "odd_power",
    "angular_samples",
    "kernel_from_name",
    "kernel_array",
    "apply_t_omega",
    "commutator_apply",
    "DecompositionPlan",
    "smooth_partial_sum",
    "shell_kernels",
    "piece_kernel",
    "lp_piece_apply",
    "shell_apply",
    "operator_norm",
    "DecayScan",
    "piece_decay_scan",
    "dini_norm",
    "piece_modulus",
    "CzBound",
    "cz_bound",
    "summation_terms",
    "summation_bound",
]


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Angular profile of a homogeneous kernel.

    1D: ``samples = (Omega(+1), Omega(-1))``.  2D: ``samples[i]`` is
    ``Omega`` at angle ``2 pi i / len(samples)``, interpolated linearly.
    """

    dimension: int
    samples: np.ndarray
    label: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if self.dimension == 1 and s.size != 2:
            raise KernelError("a 1D kernel is the pair (Omega(+1), Omega(-1))")
        if self.dimension == 2 and s.size < 4:
            raise KernelError("a 2D kernel needs at least 4 angular samples")
        if self.dimension not in (1, 2):
            raise KernelError("kernels are 1D or 2D")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        if abs(self.mean) > 1e-10 * max(self.sup_norm, 1e-300):
            raise KernelError(f"Omega has mean {self.mean:.3e} on the sphere, expected 0")

    @property
    def mean(self) -> float:
        if self.dimension == 1:
            return float(self.samples.sum())
        return float(self.samples.mean())

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def omega(self, y) -> np.ndarray:
        """``Omega(y/|y|)`` for offsets ``y`` given as a tuple of coordinate arrays."""
        if self.dimension == 1:
            (x,) = y
            return np.where(x > 0, self.samples[0], np.where(x < 0, self.samples[1], 0.0))
        theta = np.mod(np.arctan2(y[1], y[0]), 2 * np.pi)
        m = self.samples.size
        pos = theta / (2 * np.pi) * m
        i0 = np.floor(pos).astype(int) % m
        frac = pos - np.floor(pos)
        return (1 - frac) * self.samples[i0] + frac * self.samples[(i0 + 1) % m]


def hilbert() -> KernelSpec:
    return KernelSpec(1, (1.0, -1.0), "hilbert")


def odd_power(m: int, dimension: int = 2, n_angles: int = 256) -> KernelSpec:
    """``sign(cos t) |cos(m t)|`` with its discrete mean removed."""
    if dimension == 1:
        return KernelSpec(1, (1.0, -1.0), f"odd-power:{m}")
    t = 2 * np.pi * np.arange(n_angles) / n_angles
    s = np.sign(np.cos(t)) * np.abs(np.cos(m * t))
    return KernelSpec(2, s - s.mean(), f"odd-power:{m}")


def angular_samples(path) -> KernelSpec:
    values = np.loadtxt(Path(path), comments="#", ndmin=1)
    return KernelSpec(1 if values.size == 2 else 2, values, f"angular-samples:{path}")


def kernel_from_name(name: str, dimension: int = 1) -> KernelSpec:
    kind, _, arg = name.partition(":")
    if kind == "hilbert":
        return hilbert()
    if kind == "odd-power":
        return odd_power(int(arg or 1), dimension)
    if kind == "angular-samples":
        return angular_samples(arg)
    raise ParameterError(f"unknown kernel {name!r}")


def _check_kernel_grid(K: KernelSpec, grid: GridSpec):
    if K.dimension != grid.dimension:
        raise DomainError("kernel and grid dimensions differ")
    sides = grid.cell_sides
    if max(sides) - min(sides) > 1e-12 * max(sides):
        raise DomainError("singular integrals need square cells")


def _offsets(grid: GridSpec):
    h = grid.cell_sides[0]
    axes = [np.arange(-(r - 1), r) for r in grid.resolution]
    d = np.meshgrid(*axes, indexing="ij")
    y = tuple(di * h for di in d)
    dist_cells = np.sqrt(sum(di.astype(float) ** 2 for di in d))
    return y, dist_cells


def kernel_array(K: KernelSpec, grid: GridSpec, eps_cells: float = 1) -> np.ndarray:
    """Convolution weights ``K(y) * cellvol`` on offsets ``|y| >= eps_cells * h``.

    Index ``d + (N-1)`` along each axis holds offset ``d`` cells.
    """
    _check_kernel_grid(K, grid)
    y, dist = _offsets(grid)
    h = grid.cell_sides[0]
    n = grid.dimension
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = K.omega(y) / (dist * h) ** n * grid.cell_volume
    return np.where((dist >= eps_cells) & (dist > 0), vals, 0.0)


def _convolve_grid(values: np.ndarray, weights: np.ndarray, method: str = "auto") -> np.ndarray:
    """``out[x] = sum_i values[i] weights[x - i + (N-1)]`` for every grid cell ``x``."""
    if method == "auto":
        method = "direct" if values.ndim == 1 and values.size <= 8192 else "fft"
    if method == "direct":
        if values.ndim == 1:
            full = np.convolve(values, weights)
        else:
            full = signal.convolve(values, weights, mode="full", method="direct")
    elif method == "fft":
        full = signal.fftconvolve(values, weights, mode="full")
    else:
        raise ParameterError(f"unknown convolution method {method!r}")
    region = tuple(slice(r - 1, 2 * r - 1) for r in values.shape)
    return full[region]


def apply_t_omega(f: SampledFunction, K: KernelSpec, eps_cells: float = 1,
                  method: str = "auto") -> SampledFunction:
    """Truncated principal-value convolution with zero extension of ``f``."""
    if eps_cells < 1:
        raise ParameterError(f"eps_cells must be >= 1, got {eps_cells}")
    A = kernel_array(K, f.grid, eps_cells)
    return f.like(_convolve_grid(f.values, A, method))


def commutator_apply(b, applyT: Callable, f: SampledFunction) -> SampledFunction:
    """``[b, T] f = b T(f) - T(b f)``."""
    bv = np.asarray(b.values)
    if b.grid != f.grid:
        raise DomainError("b and f live on different grids")
    Tf = applyT(f).values
    Tbf = applyT(f.like(bv * f.values)).values
    return f.like(bv * Tf - Tbf)


# -- decomposition ----------------------------------------------------------

def _bump_mass(n: int) -> float:
    # int of (1-|u|^2)^4 over the unit ball
    return 256.0 / 315.0 if n == 1 else np.pi / 5.0


@dataclass(frozen=True)
class DecompositionPlan:
    """Polynomial bump ``phi`` of radius ``support`` and the schedule ``N(j) = 2^j``."""

    dimension: int = 1
    support: float = 0.01
    j_max: int = 6

    def __post_init__(self):
        if not 0 < self.support <= 0.01:
            raise ParameterError("bump radius must lie in (0, 1/100]")
        if self.j_max < 0:
            raise ParameterError("j_max must be nonnegative")

    def N(self, j: int) -> int:
        return 0 if j <= 0 else 2 ** j

    def phi(self, *x) -> np.ndarray:
        r2 = sum(np.asarray(xi, dtype=float) ** 2 for xi in x) / self.support ** 2
        c = 1.0 / (_bump_mass(self.dimension) * self.support ** self.dimension)
        return np.where(r2 < 1, c * (1 - r2) ** 4, 0.0)

    def psi(self, *x) -> np.ndarray:
        # psi-hat(xi) = phi-hat(xi) - phi-hat(2 xi)
        n = self.dimension
        return self.phi(*x) - 2.0 ** (-n) * self.phi(*(np.asarray(xi) / 2.0 for xi in x))

    def radius_cells(self, j: int, grid: GridSpec) -> float:
        return 2.0 ** j * self.support / grid.cell_sides[0]


def _smoothing_weights(plan: DecompositionPlan, m: int, grid: GridSpec) -> np.ndarray:
    """Sampled ``phi_m`` renormalised to unit discrete mass (a delta below one cell)."""
    R = int(np.floor(plan.radius_cells(m, grid)))
    n = grid.dimension
    if R < 1:
        return np.ones((1,) * n)
    h = grid.cell_sides[0]
    axes = [np.arange(-R, R + 1) * h / 2.0 ** m] * n
    pts = np.meshgrid(*axes, indexing="ij")
    w = plan.phi(*pts)
    return w / w.sum()


def smooth_partial_sum(f: SampledFunction, plan: DecompositionPlan, j: int) -> SampledFunction:
    """``S_j f = f * phi_j`` with ``f`` extended by zero."""
    if plan.dimension != f.grid.dimension:
        raise DomainError("plan and grid dimensions differ")
    if plan.radius_cells(j, f.grid) < 2:
        raise ResolutionError(f"scale 2^{j} spans fewer than 2 cells of support")
    wts = _smoothing_weights(plan, j, f.grid)
    return f.like(signal.convolve(f.values, wts, mode="same",
                                  method="direct" if f.grid.dimension == 1 else "auto"))


def shell_kernels(K: KernelSpec, grid: GridSpec) -> dict:
    """Kernel weights split by shell index ``k = floor(log2 |y|)``; they sum to ``kernel_array(K, grid, 1)``."""
    A = kernel_array(K, grid, 1)
    _, dist = _offsets(grid)
    h = grid.cell_sides[0]
    with np.errstate(divide="ignore"):
        k_of = np.floor(np.log2(np.where(dist > 0, dist * h, 1.0))).astype(int)
    out = {}
    for k in np.unique(k_of[dist > 0]):
        mask = (k_of == k) & (dist > 0)
        out[int(k)] = np.where(mask, A, 0.0)
    return out


def _smooth_kernel(A: np.ndarray, wts: np.ndarray) -> np.ndarray:
    if wts.size == 1:
        return A * wts.ravel()[0]
    return signal.convolve(A, wts, mode="same",
                           method="direct" if A.ndim == 1 else "fft")


def piece_kernel(K: KernelSpec, plan: DecompositionPlan, j: int, grid: GridSpec) -> np.ndarray:
    if j < 0:
        raise ParameterError("piece index must be >= 0")
    if plan.dimension != grid.dimension:
        raise DomainError("plan and grid dimensions differ")
    total = None
    for k, Ak in shell_kernels(K, grid).items():
        if j == 0:
            part = _smooth_kernel(Ak, _smoothing_weights(plan, k, grid))
        else:
            lo = _smoothing_weights(plan, k - plan.N(j), grid)
            hi = _smoothing_weights(plan, k - plan.N(j - 1), grid)
            if lo.size == 1 and hi.size == 1:
                continue
            part = _smooth_kernel(Ak, lo) - _smooth_kernel(Ak, hi)
        total = part if total is None else total + part
    if total is None:
        total = np.zeros(tuple(2 * r - 1 for r in grid.resolution))
    return total


def lp_piece_apply(f: SampledFunction, K: KernelSpec, plan: DecompositionPlan, j: int,
                   method: str = "auto") -> SampledFunction:
    """Apply the ``j``-th piece of the decomposition."""
    return f.like(_convolve_grid(f.values, piece_kernel(K, plan, j, f.grid), method))


def shell_apply(f: SampledFunction, K: KernelSpec, k: int, method: str = "auto") -> SampledFunction:
    shells = shell_kernels(K, f.grid)
    if k not in shells:
        return f.like(np.zeros(f.grid.shape))
    return f.like(_convolve_grid(f.values, shells[k], method))


# -- norms and decay --------------------------------------------------------

def operator_norm(apply: Callable, adjoint: Callable, grid: GridSpec, p: float = 2.0,
                  seed: int = 0, iterations: int = 50, stagnation: float = 1e-6,
                  family_size: int = 64) -> float:
    """Lower estimate of ``||T||_{L^p -> L^p}`` on the grid.

    ``p = 2``: power iteration on ``T^T T``.  Otherwise the best Rayleigh
    ratio over a seeded family of random and bump-like functions.
    """
    rng = np.random.default_rng(seed)
    if p == 2:
        x = rng.standard_normal(grid.shape)
        x /= np.linalg.norm(x)
        est = 0.0
        for _ in range(iterations):
            y = adjoint(apply(x))
            nrm = np.linalg.norm(y)
            if nrm == 0:
                return 0.0
            new = np.sqrt(nrm)
            x = y / nrm
            if est > 0 and abs(new - est) <= stagnation * new:
                est = new
                break
            est = new
        return float(np.linalg.norm(apply(x)) / np.linalg.norm(x))
    best = 0.0
    centers = grid.centers()
    for i in range(family_size):
        if i % 2 == 0:
            x = rng.standard_normal(grid.shape)
        else:
            c = [rng.uniform(lo, hi) for lo, hi in grid.bounds]
            width = rng.uniform(0.01, 0.5)
            x = np.exp(-sum((ci - cc) ** 2 for ci, cc in zip(centers, c)) / width ** 2)
        den = np.sum(np.abs(x) ** p)
        if den > 0:
            best = max(best, float((np.sum(np.abs(apply(x)) ** p) / den) ** (1.0 / p)))
    return best


class DecayScan(NamedTuple):
    table: list
    alpha: float
    intercept: float


def piece_decay_scan(K: KernelSpec, plan: DecompositionPlan, p: float, grid: GridSpec,
                     b=None, seed: int = 0, j_max: int = None) -> DecayScan:
    """Norm estimates of each piece (or of ``[b, piece]``) and the fitted decay rate.

    Fits ``log2(norm / (1 + N(j))) = c - alpha N(j-1)`` over the nonzero rows.
    """
    j_max = plan.j_max if j_max is None else j_max
    bv = None if b is None else np.asarray(b.values)
    table = []
    for j in range(j_max + 1):
        A = piece_kernel(K, plan, j, grid)
        A_adj = A[(slice(None, None, -1),) * A.ndim]

        def T(x, A=A):
            return _convolve_grid(x, A)

        def Tt(x, A_adj=A_adj):
            return _convolve_grid(x, A_adj)

        if bv is None:
            apply, adjoint = T, Tt
        else:
            def apply(x, T=T):
                return bv * T(x) - T(bv * x)

            def adjoint(x, Tt=Tt):
                return Tt(bv * x) - bv * Tt(x)

        if not np.any(A):
            table.append((j, 0.0))
            continue
        table.append((j, operator_norm(apply, adjoint, grid, p, seed=seed)))
    norms = np.array([t[1] for t in table])
    xs = np.array([plan.N(j - 1) for j, _ in table], dtype=float)
    ys_ok = norms > 1e-13 * max(norms.max(), 1e-300)
    ys = np.log2(np.where(ys_ok, norms, 1.0) / (1 + np.array([plan.N(j) for j, _ in table])))
    if ys_ok.sum() >= 2 and np.ptp(xs[ys_ok]) > 0:
        slope, intercept = np.polyfit(xs[ys_ok], ys[ys_ok], 1)
        alpha = -float(slope)
    else:
        alpha, intercept = float("nan"), float("nan")
    return DecayScan(table, alpha, float(intercept))


def piece_modulus(N: int, c: float = 1.0) -> Callable:
    """Model modulus ``c min(1, 2^N t)`` of the ``N``-th piece."""
    return lambda t: c * np.minimum(1.0, 2.0 ** N * np.asarray(t, dtype=float))


def dini_norm(omega: Callable, rtol: float = 1e-6, max_rounds: int = 12,
              step: float = 1.0 / 1024) -> float:
    """``int_0^1 omega(t) dt / t`` by trapezoid in ``log t`` with a fixed step.

    Each round pushes the lower cutoff down by a factor 100; disagreement
    after ``max_rounds`` signals a non-Dini modulus.
    """
    def rule(log_tmin):
        u = np.linspace(log_tmin, 0.0, int(np.ceil(-log_tmin / step)) + 1)
        vals = np.asarray(omega(np.exp(u)), dtype=float)
        if np.any(vals < 0):
            raise ParameterError("modulus of continuity must be nonnegative")
        return float(trapezoid(vals, u))

    log_tmin = np.log(1e-8)
    prev = rule(log_tmin)
    for _ in range(max_rounds):
        log_tmin -= np.log(100.0)
        cur = rule(log_tmin)
        if abs(cur - prev) <= rtol * abs(cur) or (cur == 0 and prev == 0):
            return cur
        prev = cur
    raise NumericError("Dini integral does not settle under refinement; omega(0+) may be nonzero")


@dataclass(frozen=True)
class CzBound:
    c_k: float
    dini: float
    l2_norm: float

    def __post_init__(self):
        if min(self.c_k, self.dini, self.l2_norm) < 0:
            raise ParameterError("Calderon-Zygmund constants are nonnegative")

    @property
    def c_t(self) -> float:
        return self.l2_norm + self.c_k + self.dini


def cz_bound(K: KernelSpec, grid: GridSpec, plan: DecompositionPlan = None, j: int = None,
             modulus_constant: float = 1.0) -> CzBound:
    """Constants of ``T_Omega`` (``plan=None``) or of the ``j``-th piece.

    The size constant is measured on the sampled kernel, the Dini norm is
    that of ``c ||Omega|| min(1, 2^N(j) t)``, the L2 norm is a power-iteration
    estimate.
    """
    _, dist = _offsets(grid)
    h = grid.cell_sides[0]
    n = grid.dimension
    if plan is None:
        A = kernel_array(K, grid, 1)
        omega = piece_modulus(0, 0.0)
    else:
        A = piece_kernel(K, plan, j, grid)
        omega = piece_modulus(plan.N(j), modulus_constant * K.sup_norm)
    with np.errstate(invalid="ignore"):
        size = np.where(dist > 0, np.abs(A) / grid.cell_volume * (dist * h) ** n, 0.0)
    A_adj = A[(slice(None, None, -1),) * A.ndim]
    l2 = operator_norm(lambda x: _convolve_grid(x, A), lambda x: _convolve_grid(x, A_adj), grid)
    return CzBound(float(size.max()), dini_norm(omega), l2)


# -- summation --------------------------------------------------------------

def summation_terms(alpha: float, theta: float, j_max: int) -> np.ndarray:
    j = np.arange(j_max + 1)
    N = np.where(j >= 1, 2.0 ** j, 0.0)
    N_prev = np.where(j >= 2, 2.0 ** (j - 1), 0.0)
    return (1 + N) * 2.0 ** (-alpha * N_prev * theta)


def _tail_bound(alpha: float, theta: float, j_max: int) -> float:
    # terms beyond j_max shrink by at most 2 * 2^(-alpha theta 2^j_max) each step
    nxt = summation_terms(alpha, theta, j_max + 1)[-1]
    rho = 2.0 * 2.0 ** (-alpha * theta * 2.0 ** j_max)
    return float("inf") if rho >= 1 else nxt / (1 - rho)


def summation_bound(alpha: float, theta: float, j_max: int = None, tail_tol: float = 1e-12) -> float:
    """``sum_{j=0}^{j_max} (1 + N(j)) 2^(-alpha N(j-1) theta)``.

    ``j_max=None`` picks the first cutoff whose tail is below ``tail_tol``;
    an explicit cutoff with a larger tail raises NumericError.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if not 0 < theta < 1:
        raise ParameterError(f"theta must lie in (0, 1), got {theta}")
    if j_max is None:
        j_max = 1
        while _tail_bound(alpha, theta, j_max) >= tail_tol:
            j_max += 1
            if j_max > 200:
                raise NumericError("summation tail does not decay")
    elif _tail_bound(alpha, theta, j_max) >= tail_tol:
        raise NumericError(f"tail beyond j_max={j_max} exceeds {tail_tol}")
    return float(np.sum(summation_terms(alpha, theta, j_max)))
