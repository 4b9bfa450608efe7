"""Random multipartite graph snapshot of the coalescent at a fixed time.

Part ``i`` holds about ``alpha_i n`` vertices.  Every unordered vertex pair
from parts ``i`` and ``j`` (including ``i == j``) is an edge independently
with probability ``1 - exp(-v_ij t / n)``.  Connected components play the
role of clusters; the largest one is reported separately as the giant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .census import Census, census_of, compositions, merge, part_sizes
from .model import ModelParams
from .rng import replica_rng
from .unionfind import UnionFind

# cap on v_ij t / n, keeping every edge probability <= 1 - 1/e
_MAX_RATE = 1.0


@dataclass(frozen=True)
class GraphSample:
    n: int
    t: float
    seed: int
    part_sizes: tuple
    census: Census
    giant_size: int
    giant_composition: tuple
    n_edges: int

    @property
    def n_vertices(self) -> int:
        return int(sum(self.part_sizes))

    @property
    def giant_fraction(self) -> float:
        """Giant size over ``n`` (not over the vertex count)."""
        return self.giant_size / self.n


def skip_sample(rng: np.random.Generator, p: float, total: int) -> np.ndarray:
    """Sorted indices in ``range(total)``, each kept independently with
    probability ``p``, generated by geometric gaps (work ~ number kept)."""
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    batch = int(total * p + 6.0 * math.sqrt(total * p) + 16)
    while True:
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps)
        if idx[-1] >= total:
            chunks.append(idx[idx < total])
            break
        chunks.append(idx)
        pos = int(idx[-1])
    return np.concatenate(chunks).astype(np.int64)


def _triangle_pairs(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # idx = r(r-1)/2 + c with 0 <= c < r
    r = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx)) / 2.0).astype(np.int64)
    r = np.where(r * (r - 1) // 2 > idx, r - 1, r)
    r = np.where((r + 1) * r // 2 <= idx, r + 1, r)
    return r, idx - r * (r - 1) // 2


def sample_edges(params: ModelParams, t: float, n: int, sizes, rng) -> tuple[np.ndarray, np.ndarray]:
    k = params.k
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    us, vs = [], []
    for i in range(k):
        for j in range(i, k):
            rate = params.V[i, j] * t
            if rate == 0.0:
                continue
            p = -math.expm1(-rate / n)
            if i == j:
                idx = skip_sample(rng, p, int(sizes[i]) * (int(sizes[i]) - 1) // 2)
                a, b = _triangle_pairs(idx)
                us.append(offsets[i] + a)
                vs.append(offsets[i] + b)
            else:
                nj = int(sizes[j])
                idx = skip_sample(rng, p, int(sizes[i]) * nj)
                us.append(offsets[i] + idx // nj)
                vs.append(offsets[j] + idx % nj)
    if not us:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(us), np.concatenate(vs)


def sample_graph(params: ModelParams, t: float, n: int, seed: int) -> GraphSample:
    """Draw one graph and return its component census.

    The stream for ``seed`` is ``replica_rng(seed)``; replica ``r`` of a
    sweep should pass ``seed ^ r``.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if n < params.k:
        raise ValueError(f"need n >= k, got n={n}, k={params.k}")
    if params.V.max() * t / n > _MAX_RATE:
        raise ValueError(
            f"v_ij t / n = {params.V.max() * t / n:.3g} is too dense for this sampler"
        )
    sizes = part_sizes(params.alpha, n)
    types = np.repeat(np.arange(params.k), sizes)
    rng = replica_rng(seed)
    us, vs = sample_edges(params, t, n, sizes, rng)
    uf = UnionFind(int(sizes.sum()))
    uf.union_edges(us, vs)
    roots, comp = compositions(uf.roots(), types, params.k)
    tot = comp.sum(axis=1)
    g = int(np.argmax(tot)) if tot.size else -1
    giant = comp[g] if g >= 0 else np.zeros(params.k, dtype=np.int64)
    rest = np.delete(comp, g, axis=0) if g >= 0 else comp
    return GraphSample(
        n=n,
        t=float(t),
        seed=seed,
        part_sizes=tuple(int(s) for s in sizes),
        census=census_of(rest),
        giant_size=int(giant.sum()),
        giant_composition=tuple(int(v) for v in giant),
        n_edges=int(us.size),
    )


def empirical_phi(sample: GraphSample) -> dict:
    """Census counts per unit ``n``, giant excluded."""
    return {x: c / sample.n for x, c in sample.census.items()}


def sample_replicas(params: ModelParams, t: float, n: int, seed: int, replicas: int) -> list[GraphSample]:
    return [sample_graph(params, t, n, seed ^ r) for r in range(replicas)]


def merged_census(samples) -> Census:
    return merge(s.census for s in samples)
