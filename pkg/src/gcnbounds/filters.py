"""Graph filter operators and their spectral norms.

Four filter kinds are first class:

===============  ==============================================  =========================
kind             matrix                                          degrees taken from
===============  ==============================================  =========================
``adj_plus_id``  A + I                                           (none)
``sym_plus_id``  D^{-1/2} A D^{-1/2} + I                         A, self-loops excluded
``rw_plus_id``   D^{-1} A + I                                    A, self-loops excluded
``sym_selfloop`` Dt^{-1/2} (A + I) Dt^{-1/2}, Dt = deg(A + I)    A + I
===============  ==============================================  =========================

Nodes with degree zero are a hard error for the three normalized kinds:
silently regularizing them would change the operator norm and corrupt
every downstream bound audit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import FilterError
from .graphs import Graph

__all__ = ["FilterMatrix", "FILTER_KINDS", "build_filter", "filter_norm"]

FILTER_KINDS = ("adj_plus_id", "sym_plus_id", "rw_plus_id", "sym_selfloop")

#: kinds whose realized matrix is symmetric
SYMMETRIC_KINDS = ("adj_plus_id", "sym_plus_id", "sym_selfloop")

#: kinds that divide by node degrees and therefore reject isolated nodes
NORMALIZED_KINDS = ("sym_plus_id", "rw_plus_id", "sym_selfloop")

# sparse construction is the default beyond this many nodes
_SPARSE_THRESHOLD = 3000

# construction-time norm tolerance; tighter than the power-iteration default
# because the convergence test stalls about an order short of the true norm
# when the top spectral gap is small (common for normalized filters)
FILTER_NORM_TOL = 1e-12


@dataclass(frozen=True)
class FilterMatrix:
    """A realized N x N graph filter with its cached spectral norm."""

    kind: str
    matrix: object  # ndarray or scipy sparse
    c_g: float
    norm_tol: float

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)


def _check_degrees(kind: str, deg: np.ndarray) -> None:
    isolated = np.flatnonzero(deg == 0)
    if isolated.size:
        raise FilterError(
            f"filter kind {kind!r} needs every node to have degree >= 1, "
            f"but node {int(isolated[0])} is isolated "
            f"({isolated.size} isolated node(s) total)")


def _realize(graph: Graph, kind: str, sparse: bool):
    a = graph.adjacency(sparse=sparse)
    n = graph.num_nodes
    eye = sp.identity(n, format="csr") if sparse else np.eye(n)
    if kind == "adj_plus_id":
        return a + eye
    if kind == "sym_selfloop":
        at = a + eye
        deg = np.asarray(at.sum(axis=1)).reshape(-1)
        _check_degrees(kind, deg)  # always >= 1 thanks to the self-loop
        dinv_sqrt = 1.0 / np.sqrt(deg)
        if sparse:
            d = sp.diags(dinv_sqrt)
            return (d @ at @ d).tocsr()
        return at * np.outer(dinv_sqrt, dinv_sqrt)
    deg = graph.degrees().astype(np.float64)
    _check_degrees(kind, deg)
    if kind == "sym_plus_id":
        dinv_sqrt = 1.0 / np.sqrt(deg)
        if sparse:
            d = sp.diags(dinv_sqrt)
            return (d @ a @ d + eye).tocsr()
        return a * np.outer(dinv_sqrt, dinv_sqrt) + eye
    if kind == "rw_plus_id":
        dinv = 1.0 / deg
        if sparse:
            return (sp.diags(dinv) @ a + eye).tocsr()
        return a * dinv[:, None] + eye
    raise FilterError(f"unknown filter kind {kind!r}; known kinds: {FILTER_KINDS}")


def build_filter(graph: Graph, kind: str, *, sparse: bool | None = None,
                 tol: float = FILTER_NORM_TOL,
                 max_iters: int = linalg.DEFAULT_MAX_ITERS,
                 seed: int = 0) -> FilterMatrix:
    """Realize the filter of the given kind for ``graph`` and cache its
    spectral norm.

    ``sparse=None`` picks dense storage for small graphs and CSR beyond
    a few thousand nodes (power iteration only needs matvecs).
    """
    if kind not in FILTER_KINDS:
        raise FilterError(f"unknown filter kind {kind!r}; known kinds: {FILTER_KINDS}")
    if sparse is None:
        sparse = graph.num_nodes > _SPARSE_THRESHOLD
    matrix = _realize(graph, kind, sparse)
    c_g = linalg.spectral_norm(matrix, tol=tol, max_iters=max_iters, seed=seed)
    return FilterMatrix(kind=kind, matrix=matrix, c_g=c_g, norm_tol=tol)


def filter_norm(filt: FilterMatrix) -> float:
    """Cached spectral norm C_g of the realized filter."""
    return filt.c_g
