"""Cluster censuses: counting components by type composition, merging
replicas, and comparing counts against expected densities."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

Census = dict  # ClusterSize tuple -> count


def part_sizes(alpha, n: int) -> np.ndarray:
    """Integer part sizes ``floor(alpha_i n)`` with the leftover vertices
    handed to the largest fractional remainders (ties go to lower index)."""
    raw = np.asarray(alpha, dtype=float) * n
    base = np.floor(raw).astype(np.int64)
    target = int(round(raw.sum()))
    frac = raw - base
    order = sorted(range(len(raw)), key=lambda i: (-frac[i], i))
    for i in order[: max(0, target - int(base.sum()))]:
        base[i] += 1
    return base


def compositions(labels: np.ndarray, types: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-component type counts from a component label for every vertex.

    Returns ``(roots, comp)`` where ``comp[c]`` is the composition of the
    component labelled ``roots[c]``; roots are sorted ascending.
    """
    roots, inv = np.unique(labels, return_inverse=True)
    comp = np.bincount(inv * k + types, minlength=roots.size * k).reshape(roots.size, k)
    return roots, comp


def census_of(comp: np.ndarray) -> Census:
    if comp.size == 0:
        return {}
    rows, counts = np.unique(comp, axis=0, return_counts=True)
    return {tuple(int(v) for v in r): int(c) for r, c in zip(rows, counts)}


def merge(censuses: Iterable[Mapping]) -> Census:
    total = Counter()
    for c in censuses:
        total.update(c)
    return dict(sorted(total.items(), key=lambda kv: (sum(kv[0]), kv[0])))


def mass_of(census: Mapping, k: int) -> np.ndarray:
    out = np.zeros(k, dtype=np.int64)
    for x, c in census.items():
        out += c * np.asarray(x, dtype=np.int64)
    return out


@dataclass(frozen=True)
class BandResult:
    x: tuple
    observed: float
    expected: float
    limit: float

    @property
    def ok(self) -> bool:
        return abs(self.observed - self.expected) <= self.limit


def poisson_band(
    observed: Mapping,
    expected: Callable[[tuple], float],
    candidates: Iterable[tuple],
    min_expected: float = 50.0,
    nsigma: float = 5.0,
) -> list[BandResult]:
    """Compare observed counts with expected counts ``mu`` on every candidate
    size with ``mu >= min_expected``; the band is ``nsigma * sqrt(mu)``."""
    out = []
    for x in candidates:
        mu = expected(x)
        if mu >= min_expected:
            out.append(BandResult(x, float(observed.get(x, 0)), mu, nsigma * np.sqrt(mu)))
    return out
