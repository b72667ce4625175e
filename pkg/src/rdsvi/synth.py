"""Synthetic heavy-tailed test graphs for simulations and experiments."""
from __future__ import annotations

import numpy as np

from .graph_core import Graph


def preferential_attachment_graph(
    n: int,
    m: int,
    rng: np.random.Generator,
    closure: float = 0.0,
) -> Graph:
    """Growing random graph with heavy-tailed degrees.

    Each arriving node attaches ``m`` edges.  The first target of every edge
    batch is degree-proportional; with probability ``closure`` each subsequent
    edge instead closes a triangle through a random neighbor of the previous
    target, which raises clustering without touching the degree tail.
    """
    if not (0 < m < n):
        raise ValueError("need 0 < m < n")
    if not (0.0 <= closure <= 1.0):
        raise ValueError("closure must lie in [0, 1]")
    edges: set[tuple[int, int]] = set()
    # degree-weighted target pool: node id repeated once per incident edge end
    pool: list[int] = []
    neighbors: list[set[int]] = [set() for _ in range(n)]

    def add_edge(u: int, v: int) -> bool:
        if u == v:
            return False
        e = (u, v) if u < v else (v, u)
        if e in edges:
            return False
        edges.add(e)
        neighbors[u].add(v)
        neighbors[v].add(u)
        pool.extend((u, v))
        return True

    # seed clique on the first m+1 nodes keeps early attachment well defined
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            add_edge(i, j)
    for v in range(m + 1, n):
        prev = -1
        placed = 0
        guard = 0
        while placed < m and guard < 50 * m:
            guard += 1
            if placed > 0 and prev >= 0 and rng.random() < closure:
                cand = sorted(neighbors[prev])
                target = int(cand[rng.integers(len(cand))]) if cand else int(pool[rng.integers(len(pool))])
            else:
                target = int(pool[rng.integers(len(pool))])
            if add_edge(v, target):
                prev = target
                placed += 1
    return Graph(n=n, edges=frozenset(edges))
