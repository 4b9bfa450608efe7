"""Event-driven Marcus-Lushnikov simulation of the vector multiplicative
coalescent.

Every unordered pair of distinct particles of types ``i`` and ``j`` forms a
bond at rate ``v_ij / n``; a bond between two clusters merges them.  Summed
over particle pairs this gives clusters ``x`` and ``y`` the merger rate
``<x|V|y> / n`` required by the kernel.

Because the per-type particle counts ``S`` never change, the total bond
rate over all ordered particle pairs is constant, so events are proposed at
the fixed rate ``R = <S|V|S> / (2n)``:

* pick an ordered type pair ``(i, j)`` with probability ``v_ij S_i S_j / <S|V|S>``
  (alias table),
* pick a uniform particle of type ``i`` and one of type ``j``,
* merge their clusters, or reject the proposal if both particles already
  share a cluster.

A rejected proposal is a bond inside an existing cluster, which is exactly
the part of ``<x|V|x>`` that the kernel does not use; that includes the
self-pair ``p == q`` possible when ``i == j``.  No particle ever bonds with
itself and the accepted events have the right intensities.
"""

from __future__ import annotations

import numpy as np

from .census import Census, merge, part_sizes
from .model import ModelParams
from .rng import replica_rng
from .unionfind import UnionFind

_BLOCK = 8192


def alias_table(weights) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for sampling index ``i`` with probability ∝ ``weights[i]``."""
    w = np.asarray(weights, dtype=float)
    K = w.size
    total = w.sum()
    if total <= 0:
        raise ValueError("alias table needs a positive total weight")
    scaled = w * K / total
    prob = np.ones(K)
    alias = np.arange(K)
    small = [i for i in range(K) if scaled[i] < 1.0]
    large = [i for i in range(K) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    # leftovers are 1 up to rounding
    return prob, alias


class CoalescentState:
    """One trajectory of the coalescent; advance it with :func:`run_until`."""

    def __init__(self, params: ModelParams, n: int, seed: int):
        sizes = part_sizes(params.alpha, n)
        if np.any(sizes < 1):
            raise ValueError(f"every part needs alpha_i n >= 1, got sizes {sizes.tolist()}")
        self.params = params
        self.n = n
        self.seed = seed
        self.S = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.particle_types = np.repeat(np.arange(params.k), sizes)
        self.clusters = UnionFind(int(sizes.sum()))
        k = params.k
        # composition of the cluster rooted at each particle (valid at roots)
        self.composition = [[0] * k for _ in range(int(sizes.sum()))]
        for p, ty in enumerate(self.particle_types.tolist()):
            self.composition[p][ty] = 1
        self.time = 0.0
        Sf = sizes.astype(float)
        pair_w = params.V * np.outer(Sf, Sf)
        self.proposal_rate = float(pair_w.sum()) / (2.0 * n)
        self._prob, self._alias = (
            alias_table(pair_w.ravel()) if self.proposal_rate > 0 else (None, None)
        )
        self.proposals = 0
        self.accepted = 0
        self._rng = replica_rng(seed)
        self._buf_pos = _BLOCK
        self._buf = None

    @property
    def k(self) -> int:
        return self.params.k

    def _refill(self):
        rng = self._rng
        self._buf = (
            rng.exponential(1.0 / self.proposal_rate, _BLOCK).tolist(),
            rng.random((_BLOCK, 4)).tolist(),
        )
        self._buf_pos = 0


def init_state(params: ModelParams, n: int, seed: int) -> CoalescentState:
    """All particles start as singletons at time 0."""
    return CoalescentState(params, n, seed)


def run_until(state: CoalescentState, t_stop: float) -> CoalescentState:
    """Advance the trajectory to ``t_stop`` (in place) and return it.

    The proposal that would overshoot ``t_stop`` is discarded and the clock
    set to ``t_stop``; by memorylessness the trajectory can be resumed.
    """
    if t_stop < state.time:
        raise ValueError(f"t_stop={t_stop} is before the current time {state.time}")
    if state.proposal_rate == 0:
        state.time = t_stop
        return state
    k = state.k
    K = k * k
    prob, alias = state._prob.tolist(), state._alias.tolist()
    S = state.S.tolist()
    off = state.offsets.tolist()
    uf = state.clusters
    comp = state.composition
    time = state.time
    while True:
        if state._buf_pos >= _BLOCK:
            state._refill()
        exps, us = state._buf
        pos = state._buf_pos
        state._buf_pos += 1
        time += exps[pos]
        if time > t_stop:
            time = t_stop
            break
        u0, u1, u2, u3 = us[pos]
        col = int(u0 * K)
        if col == K:
            col -= 1
        pair = col if u1 < prob[col] else alias[col]
        i, j = divmod(pair, k)
        a = off[i] + min(int(u2 * S[i]), S[i] - 1)
        b = off[j] + min(int(u3 * S[j]), S[j] - 1)
        state.proposals += 1
        merged = uf.union(a, b)
        if merged is None:
            continue
        keep, gone = merged
        ck, cg = comp[keep], comp[gone]
        for ty in range(k):
            ck[ty] += cg[ty]
        state.accepted += 1
    state.time = time
    return state


def census(state: CoalescentState) -> Census:
    """Count clusters by composition, read from the union-find roots."""
    counts: dict = {}
    uf = state.clusters
    for p in range(len(uf)):
        if uf._p[p] == p:
            x = tuple(state.composition[p])
            counts[x] = counts.get(x, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: (sum(kv[0]), kv[0])))


def split_giant(c: Census) -> tuple[Census, tuple]:
    """Remove one largest cluster (the largest size, then largest composition)."""
    if not c:
        return {}, ()
    big = max(c, key=lambda x: (sum(x), x))
    rest = dict(c)
    rest[big] -= 1
    if rest[big] == 0:
        del rest[big]
    return rest, big


def snapshots(params: ModelParams, n: int, seed: int, times) -> list[tuple[float, Census]]:
    """Census at each of an increasing list of times along one trajectory."""
    state = init_state(params, n, seed)
    out = []
    for t in times:
        run_until(state, t)
        out.append((float(t), census(state)))
    return out


def replica_censuses(params: ModelParams, n: int, seed: int, replicas: int, t: float) -> Census:
    """Merged census at time t over replicas with seeds ``seed ^ r``."""
    return merge(
        census(run_until(init_state(params, n, seed ^ r), t)) for r in range(replicas)
    )
