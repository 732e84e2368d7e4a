"""Young functions, their complementary functions, and Luxemburg averages."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericError, ParameterError

__all__ = [
    "YoungFunction",
    "identity",
    "power",
    "llogl",
    "expl",
    "rescaled",
    "from_name",
    "complementary",
    "complementary_young",
    "luxemburg_rows",
]

_PROBE = np.concatenate([[0.0], np.logspace(-6, 3, 241)])
_SENTINEL = 1e8


@dataclass(frozen=True, eq=False)
class YoungFunction:
    """Convex increasing ``Psi`` with ``Psi(0) = 0``, evaluated elementwise."""

    label: str
    func: Callable
    inverse: Optional[Callable] = None
    params: dict = field(default_factory=dict)
    check: bool = True

    def __post_init__(self):
        if self.check:
            self.validate()

    def __call__(self, t):
        with np.errstate(over="ignore", invalid="ignore"):
            return self.func(np.asarray(t, dtype=float))

    def validate(self) -> None:
        v = self(_PROBE)
        if v[0] != 0:
            raise ParameterError(f"{self.label}: Psi(0) = {v[0]} != 0")
        with np.errstate(invalid="ignore"):
            steps = np.diff(v)
        if np.any(steps <= 0):
            raise ParameterError(f"{self.label}: not strictly increasing on probe points")
        mid = self(0.5 * (_PROBE[:-1] + _PROBE[1:]))
        chord = 0.5 * (v[:-1] + v[1:])
        if np.any(mid > chord * (1 + 1e-12) + 1e-300):
            raise ParameterError(f"{self.label}: midpoint convexity fails")
        if not self(_SENTINEL) > 1e6:
            raise ParameterError(f"{self.label}: does not grow to infinity")


def identity() -> YoungFunction:
    return YoungFunction("identity", lambda t: t, inverse=lambda s: s)


def power(r: float) -> YoungFunction:
    if r < 1:
        raise ParameterError(f"power Young function needs r >= 1, got {r}")
    return YoungFunction(f"power:{r:g}", lambda t: t ** r,
                         inverse=lambda s: s ** (1.0 / r), params={"r": r})


def llogl(delta: float = 1.0) -> YoungFunction:
    """``t (1 + log+ t)^delta`` with natural log."""
    if delta <= 0:
        raise ParameterError(f"llogl needs delta > 0, got {delta}")

    def f(t):
        return t * (1.0 + np.log(np.maximum(t, 1.0))) ** delta

    return YoungFunction(f"llogl:{delta:g}", f, params={"delta": delta})


def expl() -> YoungFunction:
    return YoungFunction("expl", np.expm1, inverse=np.log1p)


def rescaled(psi: YoungFunction, rho: float) -> YoungFunction:
    """``t -> Psi(t^(1/rho))``; convexity is checked, not assumed."""
    if rho <= 0:
        raise ParameterError("rho must be positive")
    return YoungFunction(f"{psi.label}@{rho:g}", lambda t: psi(t ** (1.0 / rho)),
                         params={"base": psi.label, "rho": rho})


def from_name(name: str) -> YoungFunction:
    """Parse ``identity``, ``power:r``, ``llogl:delta`` or ``expl``."""
    kind, _, arg = name.partition(":")
    try:
        if kind == "identity":
            return identity()
        if kind == "power":
            return power(float(arg))
        if kind == "llogl":
            return llogl(float(arg) if arg else 1.0)
        if kind == "expl":
            return expl()
    except ValueError as exc:
        raise ParameterError(f"bad Young function spec {name!r}: {exc}") from exc
    raise ParameterError(f"unknown Young function {name!r}")


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def complementary(psi: YoungFunction, s, t_min: float = 1e-12, t_max: float = 1e12,
                  rtol: float = 1e-8):
    """``sup_{t>0} (s t - Psi(t))`` by a log-grid scan plus golden-section refinement.

    Raises NumericError when the maximiser sits at ``t_max``, i.e. the
    supremum is not attained inside the sampled range.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise ParameterError("complementary function is evaluated at s >= 0")
    flat = s_arr.ravel()
    u = np.linspace(np.log(t_min), np.log(t_max), 481)
    t = np.exp(u)
    psi_t = psi(t)
    with np.errstate(invalid="ignore", over="ignore"):
        scan = flat[:, None] * t[None, :] - psi_t[None, :]
    scan = np.where(np.isnan(scan), -np.inf, scan)
    best = np.argmax(scan, axis=1)
    if np.any((best == u.size - 1) & (flat > 0)):
        bad = flat[(best == u.size - 1) & (flat > 0)]
        raise NumericError(f"complementary of {psi.label} unbounded at s={bad.max():g}")

    a = u[np.maximum(best - 1, 0)]
    b = u[np.minimum(best + 1, u.size - 1)]

    def g(x):
        with np.errstate(invalid="ignore", over="ignore"):
            et = np.exp(x)
            val = flat * et - psi(et)
        return np.where(np.isnan(val), -np.inf, val)

    for _ in range(200):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        gc, gd = g(c), g(d)
        left = gc > gd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        if np.all(b - a <= rtol * 1e-2):
            break
    val = np.maximum(np.maximum(gc, gd), scan.max(axis=1))
    out = np.maximum(val, 0.0).reshape(s_arr.shape)
    return float(out[0]) if np.ndim(s) == 0 else out


def complementary_young(psi: YoungFunction) -> YoungFunction:
    """Numerically evaluated complementary function as a Young function."""
    return YoungFunction(f"bar({psi.label})", lambda s: complementary(psi, s),
                         params={"base": psi.label}, check=False)


def luxemburg_rows(rows: np.ndarray, psi: YoungFunction, rtol: float = 1e-13,
                   max_expand: int = 2000) -> np.ndarray:
    """Luxemburg norm of each row of ``rows`` (cells of one cube per row).

    Geometric bracketing followed by bisection in ``log(lambda)``; returns
    the feasible endpoint, so ``mean(Psi(|f|/lambda)) <= 1`` always holds.
    """
    A = np.abs(np.asarray(rows, dtype=float))
    if A.ndim == 1:
        A = A[None, :]
    mx = A.max(axis=1)
    out = np.zeros(A.shape[0])
    live = mx > 0
    if not np.any(live):
        return out
    G = A[live] / mx[live, None]

    def excess(mu):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return psi(G / mu[:, None]).mean(axis=1) > 1.0

    hi = np.ones(G.shape[0])
    lo = np.ones(G.shape[0])
    for _ in range(max_expand):
        bad = excess(hi)
        if not bad.any():
            break
        hi = np.where(bad, hi * 2.0, hi)
    else:
        raise NumericError(f"Luxemburg bracket for {psi.label} did not close from above")
    for _ in range(max_expand):
        ok = ~excess(lo)
        if not ok.any():
            break
        lo = np.where(ok, lo * 0.5, lo)
    else:
        raise NumericError(f"Luxemburg bracket for {psi.label} did not close from below")

    while np.any(hi / lo - 1.0 > rtol):
        mid = np.sqrt(lo * hi)
        bad = excess(mid)
        lo = np.where(bad, mid, lo)
        hi = np.where(bad, hi, mid)
    out[live] = hi * mx[live]
    return out
