"""Multidimensional Lambert-Euler inversion.

Given ``alpha`` and ``t``, find the unique ``y`` in the closed subcritical
region (``rho(V diag(y)) <= 1``) with

    y_i * exp(-(V y)_i) = alpha_i t * exp(-(V alpha t)_i)   for every i.

When ``alpha t`` is itself subcritical the answer is ``alpha t``.  Otherwise
``y`` is the smallest solution, reached from below by the monotone iteration
``y <- alpha t * exp(V (y - alpha t))`` started at 0.  Writing
``y = alpha t * s`` turns this into the extinction fixed point of a Poisson
branching process with mean matrix ``V diag(alpha) t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .model import ModelParams, PhaseRegion, classify

TOL_INV = 1e-12
MAX_ITER = 1_000_000
_STALL = 2 * np.finfo(float).eps


@dataclass(frozen=True)
class InversionResult:
    t: float
    y: np.ndarray
    iterations: int
    residual: float
    region: PhaseRegion


def inversion_residual(params: ModelParams, y, t: float) -> float:
    """max_i |y_i e^{-(Vy)_i} - alpha_i t e^{-(V alpha t)_i}|"""
    y = np.asarray(y, dtype=float)
    at = params.alpha * t
    lhs = y * np.exp(-(params.V @ y))
    rhs = at * np.exp(-(params.V @ at))
    return float(np.max(np.abs(lhs - rhs)))


def invert(params: ModelParams, t: float, tol: float = TOL_INV, max_iter: int = MAX_ITER) -> InversionResult:
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    region = classify(params, t)
    at = params.alpha * t
    if region.in_closure:
        return InversionResult(t, at.copy(), 0, inversion_residual(params, at, t), region)
    V = params.V
    y = np.zeros(params.k)
    it = 0
    for it in range(1, max_iter + 1):
        nxt = at * np.exp(V @ (y - at))
        step = np.max(np.abs(nxt - y) / at)
        y = nxt
        if step <= _STALL:
            break
    residual = inversion_residual(params, y, t)
    if residual > tol:
        raise NoConvergence(f"inversion residual {residual:.3e} after {it} iterations", t=t)
    return InversionResult(t, y, it, residual, region)


def invert_1d(t: float, iterations: int = 200) -> float:
    """Smallest ``x >= 0`` with ``x e^{-x} = t e^{-t}``.

    Equal to ``t`` on ``(0, 1]``; for ``t > 1`` found by bisection on ``[0, 1]``.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if t <= 1.0:
        return float(t)
    target = t * math.exp(-t)
    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(-mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def trace_post_gel(params: ModelParams, t_grid, **kwargs) -> list[InversionResult]:
    """Invert at every point of a strictly increasing time grid."""
    t_grid = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly increasing")
    return [invert(params, t, **kwargs) for t in t_grid]
