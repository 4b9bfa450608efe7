"""Closed-form cluster densities of the vector multiplicative coalescent.

``zeta(params, x, t)`` is the limiting density of clusters with type census
``x`` at time ``t``::

    zeta_x(t) = alpha**x / x! * T_x * t**(|x|-1) * exp(-<x|V|alpha> t)

with ``T_x`` from :mod:`vmcoal.spanning_tree`.  Everything is evaluated in
log space; densities below ``exp(-745)`` underflow to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

import numpy as np

from .errors import SizeOverflow
from .model import ModelParams
from .spanning_tree import log_tree_factor_batch

SIZE_CAP = 5_000_000


def default_nmax(k: int) -> int:
    if k <= 2:
        return 40
    if k <= 4:
        return 20
    return 10


def count_sizes(k: int, nmax: int) -> int:
    """Number of x in Z_+^k with 1 <= |x| <= nmax."""
    return math.comb(nmax + k, k) - 1


def _level(k: int, n: int) -> Iterator[tuple[int, ...]]:
    # compositions of n into k parts, lexicographically ascending
    for bars in combinations(range(n + k - 1), k - 1):
        prev = -1
        x = []
        for b in bars:
            x.append(b - prev - 1)
            prev = b
        x.append(n + k - 2 - prev)
        yield tuple(x)


def enumerate_sizes(k: int, nmax: int, cap: int = SIZE_CAP) -> list[tuple[int, ...]]:
    """All cluster sizes with ``1 <= |x| <= nmax`` in graded lexicographic order.

    >>> enumerate_sizes(2, 2)
    [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    """
    if k < 1 or nmax < 1:
        raise ValueError(f"need k >= 1 and nmax >= 1, got k={k}, nmax={nmax}")
    total = count_sizes(k, nmax)
    if total > cap:
        raise SizeOverflow(f"{total} cluster sizes for k={k}, nmax={nmax} exceeds cap {cap}")
    return [x for n in range(1, nmax + 1) for x in _level(k, n)]


def size_array(k: int, nmax: int, cap: int = SIZE_CAP) -> np.ndarray:
    return np.array(enumerate_sizes(k, nmax, cap), dtype=np.int64).reshape(-1, k)


def _log_factorials(nmax: int) -> np.ndarray:
    return np.array([math.lgamma(i + 1) for i in range(nmax + 1)])


def log_zeta_batch(params: ModelParams, X: np.ndarray, t: float) -> np.ndarray:
    """log zeta_x(t) for every row of X; requires t > 0."""
    if not 0 < t < math.inf:
        raise ValueError("log_zeta_batch needs a finite t > 0; use zeta() for t = 0")
    X = np.asarray(X, dtype=np.int64)
    Xf = X.astype(float)
    lf = _log_factorials(int(X.max()))
    size = X.sum(axis=1)
    out = (
        Xf @ np.log(params.alpha)
        - lf[X].sum(axis=1)
        + log_tree_factor_batch(params.V, X)
        - t * (Xf @ (params.V @ params.alpha))
        + (size - 1) * math.log(t)
    )
    return out


def zeta_batch(params: ModelParams, X: np.ndarray, t: float) -> np.ndarray:
    X = np.asarray(X, dtype=np.int64)
    if t == 0:
        out = np.zeros(len(X))
        unit = X.sum(axis=1) == 1
        out[unit] = X[unit].astype(float) @ params.alpha
        return out
    with np.errstate(under="ignore"):
        return np.exp(log_zeta_batch(params, X, t))


def _check_size(params, x):
    x = tuple(int(v) for v in x)
    if len(x) != params.k:
        raise ValueError(f"cluster size has {len(x)} entries, model has k={params.k}")
    if min(x) < 0 or sum(x) < 1:
        raise ValueError(f"invalid cluster size {x}")
    return x


def zeta(params: ModelParams, x, t: float) -> float:
    """Limiting density of clusters of size ``x`` at time ``t`` (t >= 0)."""
    x = _check_size(params, x)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return float(zeta_batch(params, np.array([x]), t)[0])


@dataclass
class ClusterDistribution:
    """Truncated table of ``zeta_x(t)`` for all ``1 <= |x| <= nmax``."""

    params: ModelParams
    t: float
    nmax: int
    sizes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @classmethod
    def compute(cls, params: ModelParams, t: float, nmax: int | None = None):
        nmax = default_nmax(params.k) if nmax is None else nmax
        X = size_array(params.k, nmax)
        return cls(params, t, nmax, X, zeta_batch(params, X, t))

    @property
    def entries(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in x): float(z) for x, z in zip(self.sizes, self.values)}

    def __iter__(self):
        for x, z in zip(self.sizes, self.values):
            yield tuple(int(v) for v in x), float(z)

    def __len__(self):
        return len(self.values)

    def mass(self) -> np.ndarray:
        """Per-type truncated mass ``sum_x zeta_x x``, summed in graded order."""
        return self.values @ self.sizes.astype(float)

    def tail_bound(self) -> float:
        """Largest per-type mass carried by the last graded level.

        A heuristic truncation diagnostic, not a certified bound.
        """
        last = self.sizes.sum(axis=1) == self.nmax
        return float((self.values[last] @ self.sizes[last].astype(float)).max())


def total_mass(params: ModelParams, t: float, nmax: int | None = None) -> tuple[np.ndarray, float]:
    """Truncated per-type mass and the last-level tail diagnostic."""
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    dist = ClusterDistribution.compute(params, t, nmax)
    return dist.mass(), dist.tail_bound()


def dzeta_dt(params: ModelParams, x, t: float) -> float:
    """Exact time derivative: zeta_x(t) * ((|x|-1)/t - <x|V|alpha>)."""
    x = _check_size(params, x)
    xv = np.array(x, dtype=float)
    return zeta(params, x, t) * ((sum(x) - 1) / t - xv @ params.V @ params.alpha)


def mse_terms(params: ModelParams, x, t: float) -> tuple[float, float, float]:
    """``(dzeta/dt, loss, gain)`` of the modified Smoluchowski equation at x.

    ``loss = zeta_x <x|V|alpha>`` and
    ``gain = 1/2 * sum_{y+z=x} <y|V|z> zeta_y zeta_z`` over ordered pairs
    with y, z nonzero.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    x = _check_size(params, x)
    xv = np.array(x)
    zx = zeta(params, x, t)
    loss = zx * float(xv @ params.V @ params.alpha)
    ys = [y for y in np.ndindex(*(v + 1 for v in x)) if 0 < sum(y) < sum(x)]
    gain = 0.0
    if ys:
        Y = np.array(ys, dtype=np.int64)
        Z = xv[None, :] - Y
        zy = zeta_batch(params, Y, t)
        zz = zeta_batch(params, Z, t)
        kern = np.einsum("ni,ij,nj->n", Y.astype(float), params.V, Z.astype(float))
        gain = 0.5 * float(np.sum(kern * zy * zz))
    return dzeta_dt(params, x, t), loss, gain


def mse_residual(params: ModelParams, x, t: float) -> float:
    """dzeta_x/dt minus the right-hand side of the modified Smoluchowski equation."""
    d, loss, gain = mse_terms(params, x, t)
    return d - (gain - loss)
