"""Undirected graph container and edge-list text I/O.

Edge-list format: one ``u v`` pair per line, whitespace-separated,
0-indexed node ids; blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError, DimensionError

__all__ = ["Graph", "parse_edges", "load_edge_list", "save_edge_list"]


@dataclass(frozen=True)
class Graph:
    """Undirected graph on nodes 0..num_nodes-1.

    Edges are stored deduplicated in canonical (u, v) order with u < v;
    self-loops are rejected (filter constructors add them where a kind
    requires them).
    """

    num_nodes: int
    edges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise DimensionError(f"graph needs at least one node, got {self.num_nodes}")
        canon = set()
        for (u, v) in self.edges:
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise DimensionError(
                    f"edge ({u}, {v}) out of range for {self.num_nodes} nodes")
            if u == v:
                raise DimensionError(f"self-loop ({u}, {v}) not allowed in the edge list")
            canon.add((u, v) if u < v else (v, u))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        """Degree of each node, self-loops excluded."""
        d = np.zeros(self.num_nodes, dtype=np.int64)
        for (u, v) in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def adjacency(self, sparse: bool = False):
        """Symmetric 0/1 adjacency as dense float64 array or CSR matrix."""
        n = self.num_nodes
        if sparse:
            if self.edges:
                rows = np.fromiter((u for u, _ in self.edges), dtype=np.int64)
                cols = np.fromiter((v for _, v in self.edges), dtype=np.int64)
                data = np.ones(len(self.edges), dtype=np.float64)
                upper = sp.coo_matrix((data, (rows, cols)), shape=(n, n))
                return (upper + upper.T).tocsr()
            return sp.csr_matrix((n, n), dtype=np.float64)
        a = np.zeros((n, n), dtype=np.float64)
        for (u, v) in self.edges:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a


def parse_edges(lines, source: str = "<edges>"):
    """Parse edge-list lines into (max_node, edge list); raises DataFormatError
    with the offending line number on malformed input."""
    edges = []
    max_node = -1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(
                f"{source}:{lineno}: expected 'u v', got {raw.strip()!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError(
                f"{source}:{lineno}: non-integer node id in {raw.strip()!r}") from None
        if u < 0 or v < 0:
            raise DataFormatError(f"{source}:{lineno}: negative node id in {raw.strip()!r}")
        if u == v:
            # self-loops in input files are ignored; kinds that need them add
            # them explicitly, so storing them would double-count
            continue
        edges.append((u, v))
        max_node = max(max_node, u, v)
    return max_node, edges


def load_edge_list(path, num_nodes: int | None = None) -> Graph:
    """Load a Graph from an edge-list file.

    ``num_nodes`` overrides the inferred node count (max id + 1), e.g. when
    trailing nodes are isolated.
    """
    with open(path, "r", encoding="utf-8") as fh:
        max_node, edges = parse_edges(fh, source=str(path))
    n = (max_node + 1) if num_nodes is None else num_nodes
    if n < 1:
        raise DataFormatError(f"{path}: no edges and no explicit node count")
    return Graph(num_nodes=n, edges=tuple(edges))


def save_edge_list(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v) in graph.edges:
            fh.write(f"{u} {v}\n")
