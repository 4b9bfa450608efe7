"""Multi-type Poisson branching processes.

A type-``i`` individual has ``Poisson(m_ij)`` children of type ``j``,
independently over ``j``.  For the mean matrix ``M = V diag(alpha) t`` the
extinction probabilities are tied to the coalescent: ``eta_i`` equals the
fraction of type-``i`` mass that stays in finite clusters at time ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, ReducibleMatrix
from .model import TOL_PHASE, ModelParams, spectral_radius, support_connected
from .rng import replica_rng
from .smoluchowski import ClusterDistribution

TOL_INV = 1e-12
MAX_ITER = 1_000_000
# a monotone float sequence can stall one or two ulps short of its limit
_STALL = 2 * np.finfo(float).eps


def mean_matrix(params: ModelParams, t: float) -> np.ndarray:
    """``m_ij = v_ij * alpha_j * t``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return params.base_matrix() * t


def _check_mean(m, irreducible=True):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"mean matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValueError("mean matrix entries must be finite and >= 0")
    # strongly connected offspring graph; the all-zero matrix (t = 0) is a
    # trivial process where every line dies at once
    if irreducible and m.any() and not (support_connected(m) and support_connected(m.T)):
        raise ReducibleMatrix("mean matrix must be irreducible", "m")
    return m


def pgf(m, s) -> np.ndarray:
    """Offspring generating functions ``f_i(s) = exp(sum_j m_ij (s_j - 1))``."""
    m = _check_mean(m, irreducible=False)
    s = np.asarray(s, dtype=float)
    return np.exp(m @ (s - 1.0))


@dataclass(frozen=True)
class Extinction:
    eta: np.ndarray
    iterations: int
    residual: float


def pgf_iterates(m, max_iter: int = MAX_ITER):
    """Yield ``s0 = 0, s_{n+1} = f(s_n)``; the sequence increases to the
    smallest fixed point of ``f`` in ``[0, 1]^k``."""
    m = _check_mean(m)
    s = np.zeros(m.shape[0])
    yield s
    for _ in range(max_iter):
        s = np.exp(m @ (s - 1.0))
        yield s


def extinction_fixed_point(m, tol: float = TOL_INV, max_iter: int = MAX_ITER) -> Extinction:
    """Extinction probabilities as the smallest fixed point of the pgf.

    Returns all ones when ``rho(m) <= 1`` (up to the phase tolerance).
    """
    m = _check_mean(m)
    k = m.shape[0]
    if spectral_radius(m) <= 1.0 + TOL_PHASE:
        return Extinction(np.ones(k), 0, 0.0)
    s = np.zeros(k)
    for it in range(1, max_iter + 1):
        nxt = np.exp(m @ (s - 1.0))
        step = np.max(np.abs(nxt - s))
        s = nxt
        if step <= _STALL:
            break
    residual = float(np.max(np.abs(np.exp(m @ (s - 1.0)) - s)))
    if residual > tol:
        raise NoConvergence(f"pgf iteration residual {residual:.3e} after {it} steps")
    return Extinction(s, it, residual)


def extinction_series(params: ModelParams, t: float, nmax: int | None = None) -> tuple[np.ndarray, float]:
    """Extinction probabilities from the truncated cluster-density series.

    ``eta_l = (1/alpha_l) * sum_x zeta_x(t) x_l``; the tail diagnostic is the
    last graded level's contribution, scaled the same way.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    dist = ClusterDistribution.compute(params, t, nmax)
    last = dist.sizes.sum(axis=1) == dist.nmax
    level = dist.values[last] @ dist.sizes[last].astype(float)
    eta = dist.mass() / params.alpha
    return eta, float((level / params.alpha).max())


@dataclass(frozen=True)
class BranchingOutcome:
    extinct: bool
    generations: int
    population: int

    @property
    def censored(self) -> bool:
        """Survival is only a censored verdict: a cap was hit."""
        return not self.extinct


def _simulate(m, start_type, rng, max_generations, population_cap):
    # plain lists and scalar draws: numpy's per-call overhead dominates at
    # these tiny sizes
    rows = m.tolist()
    k = len(rows)
    poisson = rng.poisson
    z = [0] * k
    z[start_type] = 1
    for g in range(1, max_generations + 1):
        # children of type j from all parents: a sum of independent Poissons
        lam = [0.0] * k
        for i, zi in enumerate(z):
            if zi:
                row = rows[i]
                for j in range(k):
                    lam[j] += zi * row[j]
        z = [int(poisson(l)) if l > 0.0 else 0 for l in lam]
        total = sum(z)
        if total == 0:
            return BranchingOutcome(True, g, 0)
        if total >= population_cap:
            return BranchingOutcome(False, g, total)
    return BranchingOutcome(False, max_generations, sum(z))


def simulate_branching(
    m,
    start_type: int,
    seed: int,
    max_generations: int = 10_000,
    population_cap: int = 1_000_000,
) -> BranchingOutcome:
    """Run one lineage from a single type-``start_type`` ancestor."""
    m = _check_mean(m)
    if not 0 <= start_type < m.shape[0]:
        raise ValueError(f"start_type {start_type} out of range")
    if max_generations < 1 or population_cap < 1:
        raise ValueError("caps must be positive")
    return _simulate(m, start_type, replica_rng(seed, 0), max_generations, population_cap)


@dataclass(frozen=True)
class ExtinctionEstimate:
    start_type: int
    n_replicas: int
    n_extinct: int

    @property
    def frequency(self) -> float:
        return self.n_extinct / self.n_replicas

    def sigma(self, eta: float | None = None) -> float:
        p = self.frequency if eta is None else eta
        return float(np.sqrt(p * (1.0 - p) / self.n_replicas))


def estimate_extinction(
    m,
    start_type: int,
    n_replicas: int,
    seed: int,
    max_generations: int = 10_000,
    population_cap: int = 1_000_000,
    outcomes: list | None = None,
) -> ExtinctionEstimate:
    """Monte Carlo extinction frequency; replica ``r`` uses stream ``seed ^ r``.

    Pass a list as ``outcomes`` to collect the per-replica results.
    """
    m = _check_mean(m)
    extinct = 0
    for r in range(n_replicas):
        out = _simulate(m, start_type, replica_rng(seed, r), max_generations, population_cap)
        extinct += out.extinct
        if outcomes is not None:
            outcomes.append(out)
    return ExtinctionEstimate(start_type, n_replicas, extinct)
