"""
Union-find over flat node indices
"""

import numpy as np


class UnionFind:
    """
    Disjoint sets with union by size and path halving.

    Nodes are integers 0..n-1; inactive nodes (masked out) never join a set and
    are not counted as components.
    """

    def __init__(self, n: int, active: np.ndarray | None = None):
        self.parents = np.arange(n)
        self.sizes = np.ones(n, dtype=np.int64)
        self.active = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool).ravel()

    def find(self, i: int) -> int:
        parents = self.parents
        while parents[i] != i:
            parents[i] = parents[parents[i]]
            i = parents[i]
        return int(i)

    def union(self, i: int, j: int) -> int:
        """Join the sets holding i and j; returns the surviving root"""
        root_i, root_j = self.find(i), self.find(j)
        if root_i == root_j:
            return root_i
        if self.sizes[root_i] < self.sizes[root_j]:
            root_i, root_j = root_j, root_i
        self.parents[root_j] = root_i
        self.sizes[root_i] += self.sizes[root_j]
        return root_i

    def union_pairs(self, left: np.ndarray, right: np.ndarray) -> None:
        """Union every (left[i], right[i]) pair of active nodes"""
        for i, j in zip(np.asarray(left).ravel().tolist(), np.asarray(right).ravel().tolist()):
            if self.active[i] and self.active[j]:
                self.union(i, j)

    def roots(self) -> np.ndarray:
        """Root of every node (-1 for inactive nodes)"""
        out = np.array([self.find(i) for i in range(len(self.parents))])
        out[~self.active] = -1
        return out

    def count(self) -> int:
        """Number of components among active nodes"""
        return len({self.find(i) for i in np.flatnonzero(self.active).tolist()})
