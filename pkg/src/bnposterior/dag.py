"""Directed acyclic graphs over integer node ids, plus the graph queries
needed for feature evaluation (reachability, moral adjacency, Markov
blankets)."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class Dag:
    """Immutable DAG stored as one parent set per node.

    Acyclicity is checked at construction. Indegree bounds are the
    caller's business (samplers and search enforce their own k).
    """

    __slots__ = ("n", "parent_sets", "_hash")

    def __init__(self, n: int, parent_sets: Sequence[Iterable[int]], *, _checked: bool = False):
        if n < 1:
            raise ValueError("need at least one node")
        if len(parent_sets) != n:
            raise ValueError(f"expected {n} parent sets, got {len(parent_sets)}")
        sets = []
        for i, ps in enumerate(parent_sets):
            tup = tuple(sorted(set(int(p) for p in ps)))
            for p in tup:
                if p < 0 or p >= n:
                    raise ValueError(f"node {i}: parent {p} out of range")
                if p == i:
                    raise ValueError(f"node {i} lists itself as a parent")
            sets.append(tup)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "parent_sets", tuple(sets))
        object.__setattr__(self, "_hash", hash((n, self.parent_sets)))
        if not _checked and self.topological_order() is None:
            raise ValueError("graph contains a directed cycle")

    def __setattr__(self, name, value):
        raise AttributeError("Dag is immutable")

    def __eq__(self, other):
        return isinstance(other, Dag) and self.n == other.n and self.parent_sets == other.parent_sets

    def __hash__(self):
        return self._hash

    def __repr__(self):
        edges = ", ".join(f"{p}->{c}" for p, c in self.edges())
        return f"Dag(n={self.n}, edges=[{edges}])"

    def parents(self, i: int) -> tuple[int, ...]:
        return self.parent_sets[i]

    def edges(self) -> list[tuple[int, int]]:
        """All (parent, child) pairs, sorted."""
        out = []
        for c, ps in enumerate(self.parent_sets):
            for p in ps:
                out.append((p, c))
        out.sort()
        return out

    def num_edges(self) -> int:
        return sum(len(ps) for ps in self.parent_sets)

    def has_edge(self, parent: int, child: int) -> bool:
        return parent in self.parent_sets[child]

    def topological_order(self) -> list[int] | None:
        """A topological order (parents first), or None if cyclic."""
        n = self.n
        remaining = set(range(n))
        placed: set[int] = set()
        order: list[int] = []
        while remaining:
            ready = sorted(i for i in remaining if placed.issuperset(self.parent_sets[i]))
            if not ready:
                return None
            for i in ready:
                order.append(i)
                placed.add(i)
                remaining.discard(i)
        return order

    def adjacency(self) -> np.ndarray:
        """Boolean matrix A with A[p, c] true iff edge p->c exists."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for c, ps in enumerate(self.parent_sets):
            for p in ps:
                a[p, c] = True
        return a

    def reachability(self) -> np.ndarray:
        """R[i, j] true iff a directed path i -> ... -> j (length >= 1) exists."""
        n = self.n
        anc = [0] * n  # bitmask of strict ancestors per node
        for i in self._topo_checked():
            m = 0
            for p in self.parent_sets[i]:
                m |= (1 << p) | anc[p]
            anc[i] = m
        r = np.zeros((n, n), dtype=bool)
        for j in range(n):
            m = anc[j]
            while m:
                b = m & -m
                r[b.bit_length() - 1, j] = True
                m ^= b
        return r

    def moral_adjacency(self) -> np.ndarray:
        """Symmetric matrix: true iff an edge in either direction or a common child.

        Adjacency in the moral graph coincides with Markov-blanket membership.
        """
        n = self.n
        m = np.zeros((n, n), dtype=bool)
        for c, ps in enumerate(self.parent_sets):
            for p in ps:
                m[p, c] = m[c, p] = True
            for a_i in range(len(ps)):
                for b_i in range(a_i + 1, len(ps)):
                    m[ps[a_i], ps[b_i]] = m[ps[b_i], ps[a_i]] = True
        return m

    def markov_blanket(self, i: int) -> set[int]:
        """Parents, children, and co-parents of node i."""
        adj = self.moral_adjacency()
        return {j for j in range(self.n) if adj[i, j]}

    def _topo_checked(self) -> list[int]:
        order = self.topological_order()
        if order is None:  # unreachable for validated instances
            raise ValueError("graph contains a directed cycle")
        return order


def empty_dag(n: int) -> Dag:
    return Dag(n, [() for _ in range(n)], _checked=True)


def parent_masks(parent_sets: Sequence[Iterable[int]]) -> list[int]:
    """Parent sets as bitmasks (bit p set iff p is a parent)."""
    out = []
    for ps in parent_sets:
        m = 0
        for p in ps:
            m |= 1 << p
        out.append(m)
    return out


def masks_acyclic(masks: Sequence[int]) -> bool:
    """Acyclicity test on parent bitmasks by iterated source elimination."""
    n = len(masks)
    removed = 0
    left = list(range(n))
    while left:
        progressed = False
        rest = []
        for i in left:
            if masks[i] & ~removed == 0:
                removed |= 1 << i
                progressed = True
            else:
                rest.append(i)
        if not progressed:
            return False
        left = rest
    return True
