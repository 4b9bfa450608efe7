"""Array-backed disjoint-set forest (union by size, path compression)."""

from __future__ import annotations

import numpy as np


class UnionFind:
    def __init__(self, n: int):
        # plain lists: scalar indexing is much cheaper than on numpy arrays
        self._p = list(range(n))
        self._s = [1] * n

    def __len__(self):
        return len(self._p)

    def find(self, a: int) -> int:
        p = self._p
        root = a
        while p[root] != root:
            root = p[root]
        while p[a] != root:
            p[a], a = root, p[a]
        return root

    def union(self, a: int, b: int) -> tuple[int, int] | None:
        """Merge the sets of a and b.

        Returns ``(kept_root, absorbed_root)``, or None if a and b were
        already in the same set.
        """
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        s = self._s
        if s[ra] < s[rb]:
            ra, rb = rb, ra
        self._p[rb] = ra
        s[ra] += s[rb]
        return ra, rb

    def union_edges(self, us, vs) -> None:
        for a, b in zip(np.asarray(us).tolist(), np.asarray(vs).tolist()):
            self.union(a, b)

    def roots(self) -> np.ndarray:
        """Root of every element, as an array."""
        parent = np.asarray(self._p, dtype=np.int64)
        while True:
            nxt = parent[parent]
            if np.array_equal(nxt, parent):
                break
            parent = nxt
        self._p = parent.tolist()
        return parent

    def component_size(self, a: int) -> int:
        return self._s[self.find(a)]
