"""Temporal adjacencies and NT x NT product selection graphs.

Flat indexing follows column stacking of the ``N x T`` signal: the pair
(vertex ``i``, instant ``t``), both 0-based, maps to ``t * N + i``.  Block
``(t, s)`` of a product matrix therefore relates instants ``t`` and ``s``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import SelectionMatrix


@dataclass(frozen=True)
class TemporalParams:
    """Number of instants ``T``, half-window ``M``, attenuation ``alpha`` and threshold ``gamma``."""

    T: int
    M: int = 1
    alpha: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 2:
            raise ValueError(f"T must be an integer >= 2, got {self.T}")
        if int(self.M) != self.M or not 1 <= self.M <= self.T - 1:
            raise ValueError(f"M must satisfy 1 <= M <= T - 1 (M={self.M}, T={self.T})")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (self.gamma >= 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be a finite nonnegative number, got {self.gamma}")

    @property
    def window(self) -> int:
        return effective_window(self.M, self.alpha, self.gamma)


def effective_window(M: int, alpha: float, gamma: float) -> int:
    """Largest offset ``l <= M`` whose block survives, i.e. ``alpha**l > gamma``.

    ``alpha**l`` is non-increasing in ``l``, so surviving offsets form a
    contiguous range starting at 1.  Returns 0 when even ``l = 1`` fails.
    """
    window = 0
    for lag in range(1, M + 1):
        if not alpha ** lag > gamma:
            break
        window = lag
    return window


def _band(T: int, offsets) -> sp.csr_matrix:
    offsets = sorted(set(offsets))
    if not offsets:
        return sp.csr_matrix((T, T), dtype=np.int8)
    diags = [np.ones(T - abs(o), dtype=np.int8) for o in offsets]
    return sp.diags(diags, offsets, shape=(T, T), format="csr", dtype=np.int8)


def line_graph_adjacency(T: int) -> SelectionMatrix:
    """Undirected path on ``T`` instants: ones on the first off-diagonals."""
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    return SelectionMatrix(_band(T, [-1, 1]), "temporal")


def temporal_adjacency(T: int, M: int) -> SelectionMatrix:
    """Symmetric banded Toeplitz matrix with ones where ``1 <= |t - s| <= M``."""
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    if not 1 <= M < T:
        raise ValueError(f"M must satisfy 1 <= M <= T - 1 (M={M}, T={T})")
    lags = range(1, M + 1)
    return SelectionMatrix(_band(T, [*lags, *(-l for l in lags)]), "temporal")


def _block_kron(band: sp.csr_matrix, block: sp.csr_matrix) -> sp.csr_matrix:
    """Sparse ``kron(band, block)`` for 0/1 factors, assembled directly in CSR.

    Avoids the int64 COO intermediate of :func:`scipy.sparse.kron`, which
    dominates peak memory at sensor-network scale.
    """
    band = sp.csr_matrix(band)
    block = sp.csr_matrix(block)
    band.sort_indices()
    block.sort_indices()
    T, N = band.shape[0], block.shape[0]
    band_deg = np.diff(band.indptr)
    block_deg = np.diff(block.indptr)
    row_nnz = (band_deg[:, None] * block_deg[None, :]).ravel()
    nnz = int(row_nnz.sum())
    index_dtype = np.int32 if max(nnz, T * N) < np.iinfo(np.int32).max else np.int64
    indptr = np.zeros(T * N + 1, dtype=index_dtype)
    np.cumsum(row_nnz, out=indptr[1:])
    indices = np.empty(nnz, dtype=index_dtype)
    # output slot of block entry e (row r) for the k-th selected instant:
    #   row start + k * deg(r) + (e - start of r in block)
    entry_row = np.repeat(np.arange(N), block_deg)
    entry_rank = np.arange(block.nnz) - block.indptr[entry_row]
    for t in range(T):
        instants = band.indices[band.indptr[t]:band.indptr[t + 1]]
        m = instants.size
        if m == 0:
            continue
        slot = (m * block.indptr[entry_row] + entry_rank)[None, :] \
            + np.arange(m)[:, None] * block_deg[entry_row][None, :]
        cols = instants.astype(index_dtype)[:, None] * N + block.indices[None, :]
        indices[indptr[t * N] + slot.ravel()] = cols.ravel()
    data = np.ones(nnz, dtype=np.int8)
    return sp.csr_matrix((data, indices, indptr), shape=(T * N, T * N))


def strong_product(a_gk: SelectionMatrix, T: int) -> SelectionMatrix:
    """Strong product ``I_T (x) A + A_S (x) (A + I_N)`` of a k-hop graph with a path.

    Diagonal blocks equal ``A`` (the centre node is not selected at its own
    instant); blocks for adjacent instants equal ``A + I_N``.
    """
    a = a_gk.matrix
    n = a.shape[0]
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if T == 1:
        return SelectionMatrix(a, "product")
    same = _block_kron(sp.identity(T, dtype=np.int8, format="csr"), a)
    adjacent = _block_kron(line_graph_adjacency(T).matrix, a + sp.identity(n, dtype=np.int8))
    # the two terms have disjoint block supports
    return SelectionMatrix(same + adjacent, "product")


def node_selecting_graph(a_gkp: SelectionMatrix, p: TemporalParams) -> SelectionMatrix:
    """Weighted node-selecting graph over ``T`` instants.

    Block ``(t, s)`` with ``l = |t - s|`` is ``A + I_N`` when ``l = 0``, the
    indicator of ``alpha**l (A + I_N) > gamma`` for ``1 <= l <= M`` and zero
    beyond ``M``.  The blocks are binary, so the attenuated threshold is all or
    nothing per offset: the block survives exactly when ``alpha**l > gamma``.
    No fractional weights are produced.
    """
    n = a_gkp.dim
    window = effective_window(p.M, p.alpha, p.gamma)
    lags = range(1, window + 1)
    band = _band(p.T, [0, *lags, *(-l for l in lags)])
    closed = a_gkp.matrix + sp.identity(n, dtype=np.int8, format="csr")
    return SelectionMatrix(_block_kron(band, closed), "product")


def flat_index(i: int, t: int, n_vertices: int) -> int:
    """Position of (vertex ``i``, instant ``t``) in ``vec(X)``."""
    return t * n_vertices + i


def unflatten_index(k: int, n_vertices: int) -> tuple[int, int]:
    """Inverse of :func:`flat_index`: returns ``(vertex, instant)``."""
    t, i = divmod(int(k), n_vertices)
    return i, t
