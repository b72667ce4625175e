"""Undirected simple graphs: edge-list IO, induced subgraphs, adjacency matrices."""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np


class GraphFormatError(ValueError):
    """Raised on malformed or empty edge-list input."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..n-1.

    ``labels`` keeps the original node identifiers from the source edge list
    (index k holds the label of internal node k).
    """

    n: int
    edges: frozenset[tuple[int, int]]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for (i, j) in self.edges:
            if not (0 <= i < j < self.n):
                raise GraphFormatError(f"edge ({i},{j}) out of range for n={self.n}")
        if self.labels and len(self.labels) != self.n:
            raise GraphFormatError("labels length must equal node count")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[np.ndarray]:
        """Sorted neighbor arrays, index by node."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for (i, j) in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return [np.array(sorted(a), dtype=np.int64) for a in adj]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for (i, j) in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric 0/1 adjacency with a zero diagonal, stored dense."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("adjacency must be square")
        if b.diagonal().any():
            raise ValueError("adjacency diagonal must be zero")
        if not np.array_equal(b, b.T):
            raise ValueError("adjacency must be symmetric")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.bits.sum()) // 2

    def degree(self) -> np.ndarray:
        return self.bits.sum(axis=1).astype(np.int64)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.bits, k=1))
        return frozenset(zip(i.tolist(), j.tolist()))

    def contains(self, other: "AdjacencyMatrix") -> bool:
        """Entrywise self >= other."""
        return bool(np.all(self.bits >= other.bits))

    def __eq__(self, other) -> bool:
        return isinstance(other, AdjacencyMatrix) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.n, self.bits.tobytes()))


def load_edge_list(source) -> Graph:
    """Parse a whitespace-separated pair-per-line edge list.

    ``source`` is a path, a text stream, or a string of lines.  Lines that are
    blank or start with ``#`` are skipped.  Node ids are compacted to 0..n-1 in
    first-seen order; duplicate edges and self-loops are dropped with a single
    warning carrying the counts.
    """
    if isinstance(source, str) and "\n" not in source and "#" not in source:
        with open(source, "r", encoding="utf-8") as fh:
            return load_edge_list(fh)
    if isinstance(source, str):
        source = io.StringIO(source)

    index: dict[str, int] = {}
    labels: list[str] = []
    edges: set[tuple[int, int]] = set()
    dup = loops = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected two node ids, got {line!r}")
        uv = []
        for tok in parts:
            if tok not in index:
                index[tok] = len(labels)
                labels.append(tok)
            uv.append(index[tok])
        u, v = uv
        if u == v:
            loops += 1
            continue
        e = (u, v) if u < v else (v, u)
        if e in edges:
            dup += 1
        else:
            edges.add(e)
    if not edges:
        raise GraphFormatError("edge list is empty")
    if dup or loops:
        warnings.warn(f"dropped {dup} duplicate edges and {loops} self-loops", stacklevel=2)
    return Graph(n=len(labels), edges=frozenset(edges), labels=tuple(labels))


def write_edge_list(g: Graph, path: str) -> None:
    """Write edges one per line using original labels when present."""
    lab = g.labels if g.labels else tuple(str(k) for k in range(g.n))
    with open(path, "w", encoding="utf-8") as fh:
        for (i, j) in sorted(g.edges):
            fh.write(f"{lab[i]} {lab[j]}\n")


def induced_subgraph(g: Graph, nodes) -> Graph:
    """Subgraph on ``nodes``, relabeled 0..k-1 by position in ``nodes``."""
    nodes = list(nodes)
    if len(set(nodes)) != len(nodes):
        raise ValueError("nodes must be distinct")
    for v in nodes:
        if not (0 <= v < g.n):
            raise ValueError(f"node {v} out of range")
    pos = {v: k for k, v in enumerate(nodes)}
    edges = set()
    for (i, j) in g.edges:
        if i in pos and j in pos:
            a, b = pos[i], pos[j]
            edges.add((a, b) if a < b else (b, a))
    lab = g.labels if g.labels else tuple(str(k) for k in range(g.n))
    return Graph(n=len(nodes), edges=frozenset(edges), labels=tuple(lab[v] for v in nodes))


def to_adjacency(g: Graph) -> AdjacencyMatrix:
    bits = np.zeros((g.n, g.n), dtype=bool)
    for (i, j) in g.edges:
        bits[i, j] = bits[j, i] = True
    return AdjacencyMatrix(bits)
