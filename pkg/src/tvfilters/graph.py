"""Sensor graphs and binary selection matrices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

Weighting = Literal["binary", "inverse-distance", "gaussian"]
SELECTION_TAGS = ("khop", "temporal", "product")


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph on ``n_vertices`` sensor nodes.

    ``adjacency`` is stored as CSR, symmetric, nonnegative and without
    self-loops.  The degree and Laplacian views are derived on demand.
    """

    adjacency: sp.csr_matrix

    def __post_init__(self):
        a = sp.csr_matrix(self.adjacency, dtype=np.float64)
        a.eliminate_zeros()
        a.sort_indices()
        if a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"adjacency must be square and non-empty, got {a.shape}")
        if not np.all(np.isfinite(a.data)) or np.any(a.data < 0):
            raise ValueError("edge weights must be finite and nonnegative")
        if np.any(a.diagonal() != 0):
            raise ValueError("graph must not contain self-loops")
        if abs(a - a.T).max() != 0:
            raise ValueError("adjacency must be symmetric")
        object.__setattr__(self, "adjacency", a)

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        return degree_vector(self)

    def degree_matrix(self) -> sp.csr_matrix:
        return sp.diags(self.degrees, format="csr")

    def laplacian(self) -> sp.csr_matrix:
        """Combinatorial Laplacian ``D - A``."""
        return (self.degree_matrix() - self.adjacency).tocsr()

    def edges(self):
        """Yield ``(i, j, weight)`` for every undirected edge with ``i < j``."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        for i, j, w in zip(upper.row[order], upper.col[order], upper.data[order]):
            yield int(i), int(j), float(w)

    @classmethod
    def from_edges(cls, n_vertices: int, edges) -> "Graph":
        """Build from an iterable of ``(i, j)`` or ``(i, j, weight)`` tuples."""
        rows, cols, vals = [], [], []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
        a = sp.coo_matrix((vals, (rows, cols)), shape=(n_vertices, n_vertices))
        # repeated edges accumulate their weights
        return cls(a.tocsr())


@dataclass(frozen=True)
class SelectionMatrix:
    """Binary sparse matrix encoding a node-selection relation.

    Stored entries are always 1 (absence means 0).  Data is kept as int8 so
    that the product graph at sensor-network scale stays small in memory;
    products with float vectors upcast automatically.
    """

    matrix: sp.csr_matrix
    tag: str

    def __post_init__(self):
        if self.tag not in SELECTION_TAGS:
            raise ValueError(f"unknown selection tag {self.tag!r}")
        m = sp.csr_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"selection matrix must be square, got {m.shape}")
        if np.any(m.data == 0):
            m = m.copy()
            m.eliminate_zeros()
        if np.any(m.data != 1):
            raise ValueError("selection matrix entries must all equal 1")
        m = m.astype(np.int8, copy=False)
        if not m.has_sorted_indices:
            m = m.sorted_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_symmetric(self) -> bool:
        return (self.matrix != self.matrix.T).nnz == 0

    @classmethod
    def from_mask(cls, mask, tag: str) -> "SelectionMatrix":
        """Wrap a dense or sparse boolean mask."""
        m = sp.csr_matrix(mask, dtype=bool).astype(np.int8)
        return cls(m, tag)


def _pairwise_check(coords: np.ndarray, k: int) -> None:
    n = coords.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points to build a k-NN graph")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N (k={k}, N={n})")
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")


def build_knn_graph(
    coords,
    k: int,
    weighting: Weighting = "binary",
    sigma: float | None = None,
) -> Graph:
    """OR-symmetrized k-nearest-neighbour graph under Euclidean distance.

    Edge ``(i, j)`` exists when ``j`` is among the ``k`` nearest points of
    ``i`` or vice versa.  Ties at the k-th distance are broken by the KD-tree
    query order.

    Args:
        coords: ``(N, d)`` array of point coordinates.
        k: Neighbours per point, ``1 <= k < N``.
        weighting: ``"binary"`` (all ones), ``"inverse-distance"`` (``1/d``)
            or ``"gaussian"`` (``exp(-d**2 / sigma**2)``).
        sigma: Gaussian kernel width; defaults to the mean k-NN distance.

    Returns:
        Graph: the symmetric, self-loop-free sensor graph.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim == 1:
        coords = coords[:, None]
    _pairwise_check(coords, k)
    n = coords.shape[0]

    # k + 1 because each point is its own nearest neighbour
    dist, idx = cKDTree(coords).query(coords, k=k + 1)
    rows = np.repeat(np.arange(n), k + 1)
    cols = idx.ravel()
    dists = dist.ravel()
    keep = rows != cols
    rows, cols, dists = rows[keep], cols[keep], dists[keep]
    if rows.size != n * k:
        # a duplicate point displaced the query point from slot 0
        rows, cols, dists = _drop_to_k(rows, cols, dists, n, k)

    if weighting == "binary":
        w = np.ones_like(dists)
    elif weighting == "inverse-distance":
        if np.any(dists == 0):
            raise ValueError("duplicate coordinates give zero distance; "
                             "inverse-distance weighting is undefined")
        w = 1.0 / dists
    elif weighting == "gaussian":
        if sigma is None:
            sigma = float(np.mean(dists)) or 1.0
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        w = np.exp(-(dists ** 2) / sigma ** 2)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")

    directed = sp.csr_matrix((w, (rows, cols)), shape=(n, n))
    # OR-symmetrization; weights are a function of distance, hence equal both ways
    sym = directed.maximum(directed.T).tocsr()
    return Graph(sym)


def _drop_to_k(rows, cols, dists, n, k):
    out_r, out_c, out_d = [], [], []
    for i in range(n):
        sel = rows == i
        out_r.append(rows[sel][:k])
        out_c.append(cols[sel][:k])
        out_d.append(dists[sel][:k])
    return np.concatenate(out_r), np.concatenate(out_c), np.concatenate(out_d)


def logical_adjacency(g: Union[Graph, SelectionMatrix, sp.spmatrix]) -> SelectionMatrix:
    """Binary indicator of the nonzero pattern of an adjacency, zero diagonal."""
    if isinstance(g, Graph):
        a = g.adjacency
    elif isinstance(g, SelectionMatrix):
        a = g.matrix
    else:
        a = sp.csr_matrix(g)
    mask = sp.csr_matrix(a != 0)
    mask.setdiag(False)
    mask.eliminate_zeros()
    return SelectionMatrix.from_mask(mask, "khop")


def degree_vector(m) -> np.ndarray:
    """Row sums of a graph, selection matrix or sparse/dense matrix."""
    if isinstance(m, Graph):
        a = m.adjacency
    elif isinstance(m, SelectionMatrix):
        a = m.matrix
    else:
        a = m
    return np.asarray(a.sum(axis=1), dtype=np.float64).ravel()
