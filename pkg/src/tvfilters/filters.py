"""Mean and median filters over spatio-temporal node-selecting graphs.

Signals are ``N x T`` float arrays; column ``t`` is the graph signal at
instant ``t``.  Every (vertex, instant) pair is addressed 0-based and
flattened column-major, matching :mod:`tvfilters.product`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph, SelectionMatrix, logical_adjacency
from .khop import KHopParams, khop_attenuated, khop_unweighted
from .product import (TemporalParams, flat_index,
                      node_selecting_graph, strong_product, unflatten_index)

FilterKind = Literal["mean", "median"]
ProductKind = Literal["selecting", "strong"]

# rows gathered per block when padding neighbourhoods for the median
_MEDIAN_CHUNK_ROWS = 32768


@dataclass(frozen=True)
class FilterConfig:
    """Hyperparameters of one filter run.

    ``product`` picks the neighbourhood graph: ``"selecting"`` is the
    attenuated node-selecting graph built from ``khop`` and ``temporal``;
    ``"strong"`` is the plain strong product of the unweighted ``K``-hop
    graph with a path over time (``beta``, ``alpha``, ``gamma`` and ``M``
    are ignored, the temporal reach is one instant).
    """

    khop: KHopParams
    temporal: TemporalParams
    kind: FilterKind = "mean"
    include_self: bool = True
    product: ProductKind = "selecting"

    def __post_init__(self):
        if self.kind not in ("mean", "median"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.product not in ("selecting", "strong"):
            raise ValueError(f"unknown product graph {self.product!r}")

    @property
    def window(self) -> int:
        """Temporal reach in instants after attenuation."""
        if self.product == "strong":
            return 1
        return self.temporal.window


@dataclass
class FilterStats:
    """Counters filled in by the sequential filters."""

    empty_neighborhoods: int = 0
    visited: int = 0


@dataclass(frozen=True)
class NeighborhoodSet:
    """Selected (vertex, instant) pairs around ``center``.

    ``partition`` maps the absolute time offset ``|instant - t|`` to the
    members at that offset; offset 0 holds same-instant members.
    """

    center: tuple[int, int]
    members: tuple[tuple[int, int], ...]
    partition: dict[int, tuple[tuple[int, int], ...]] = field(default_factory=dict)

    def values(self, X: np.ndarray) -> np.ndarray:
        """The value multiset ``g(N)`` as a 1-D array."""
        if not self.members:
            return np.empty(0)
        v, t = np.array(self.members).T
        return np.asarray(X)[v, t]


def as_signal(X, n_vertices: Optional[int] = None, n_instants: Optional[int] = None) -> np.ndarray:
    """Validate an ``N x T`` time-vertex signal and return it as float64."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"signal must be a 2-D N x T array, got shape {X.shape}")
    if n_vertices is not None and X.shape[0] != n_vertices:
        raise ValueError(f"signal has {X.shape[0]} rows but the graph has {n_vertices} vertices")
    if n_instants is not None and X.shape[1] != n_instants:
        raise ValueError(f"signal has {X.shape[1]} columns, expected T={n_instants}")
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        i, t = bad[0]
        raise ValueError(f"non-finite signal value at vertex {i}, instant {t}")
    return X


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).ravel(order="F")


def unvec(x: np.ndarray, n_vertices: int) -> np.ndarray:
    return np.asarray(x).reshape((n_vertices, -1), order="F")


def spatial_selection(graph: Graph, cfg: FilterConfig) -> SelectionMatrix:
    """The N x N spatial k-hop graph the configuration selects from."""
    a = logical_adjacency(graph)
    if cfg.product == "strong":
        return khop_unweighted(a, cfg.khop.K)
    return khop_attenuated(a, cfg.khop)


def selection_graph(graph: Graph, cfg: FilterConfig) -> SelectionMatrix:
    """Product graph for ``cfg`` with the self-inclusion policy applied."""
    spatial = spatial_selection(graph, cfg)
    if cfg.product == "strong":
        asp = strong_product(spatial, cfg.temporal.T)
    else:
        asp = node_selecting_graph(spatial, cfg.temporal)
    return apply_self_policy(asp, cfg.include_self)


def apply_self_policy(asp: SelectionMatrix, include_self: bool) -> SelectionMatrix:
    """Force the diagonal of a product graph to 1 (include) or 0 (exclude)."""
    m = asp.matrix
    diag = m.diagonal()
    if include_self and np.all(diag == 1):
        return asp
    if not include_self and not np.any(diag):
        return asp
    if include_self:
        missing = sp.diags((diag == 0).astype(np.int8), format="csr", dtype=np.int8)
        out = m + missing
    else:
        out = m - sp.diags(diag.astype(np.int8), format="csr", dtype=np.int8)
        out.eliminate_zeros()
    return SelectionMatrix(out, asp.tag)


def neighborhood(asp: SelectionMatrix, i: int, t: int, n_vertices: int) -> NeighborhoodSet:
    """Members selected by row ``(i, t)`` of a product graph.

    The graph is undirected, so the row support equals the column support.
    The centre itself is a member iff the diagonal entry is set.
    """
    n_instants, rem = divmod(asp.dim, n_vertices)
    if rem:
        raise ValueError(f"product dimension {asp.dim} is not a multiple of N={n_vertices}")
    if not (0 <= i < n_vertices and 0 <= t < n_instants):
        raise IndexError(f"(vertex {i}, instant {t}) out of range for N={n_vertices}, T={n_instants}")
    m = asp.matrix
    row = flat_index(i, t, n_vertices)
    cols = m.indices[m.indptr[row]:m.indptr[row + 1]]
    members = tuple(unflatten_index(c, n_vertices) for c in np.sort(cols))
    partition: dict[int, list] = {}
    for v, s in members:
        partition.setdefault(abs(s - t), []).append((v, s))
    return NeighborhoodSet(
        center=(i, t),
        members=members,
        partition={lag: tuple(ms) for lag, ms in sorted(partition.items())},
    )


def _closed_neighbors(spatial: SelectionMatrix) -> list[np.ndarray]:
    m = spatial.matrix
    n = m.shape[0]
    out = []
    for i in range(n):
        nbrs = m.indices[m.indptr[i]:m.indptr[i + 1]]
        out.append(np.sort(np.append(nbrs, i)))
    return out


def _sequential_sets(graph: Graph, cfg: FilterConfig, T: int):
    """Yield ``(i, t, vertices_by_instant)`` for every centre, time-major.

    The window is clamped at the signal ends: past offsets go back at most
    ``min(window, t)`` instants and future ones forward ``min(window, T-1-t)``.
    For interior instants this is the full neighbourhood; at the ends it is
    the truncated union of the remaining offsets.
    """
    spatial = spatial_selection(graph, cfg)
    closed = _closed_neighbors(spatial)
    # at its own instant the centre is selected iff include_self; other
    # instants always carry the closed neighbourhood (A + I_N blocks)
    same_instant = [c if cfg.include_self else c[c != i] for i, c in enumerate(closed)]
    w = cfg.window
    for t in range(T):
        past = min(w, t)
        future = min(w, T - 1 - t)
        for i in range(graph.n_vertices):
            picks = [(s, same_instant[i] if s == t else closed[i])
                     for s in range(t - past, t + future + 1)]
            yield i, t, picks


def mean_filter_sequential(X, cfg: FilterConfig, graph: Graph,
                           stats: Optional[FilterStats] = None) -> np.ndarray:
    """Node-by-node mean over boundary-clamped neighbourhoods.

    Each output ``y[i, t]`` is the arithmetic mean of the values selected
    around ``(i, t)``.  An empty neighbourhood (only possible with
    ``include_self=False``) passes the input through and is counted in
    ``stats.empty_neighborhoods``.
    """
    T = cfg.temporal.T
    X = as_signal(X, graph.n_vertices, T)
    stats = stats if stats is not None else FilterStats()
    Y = np.empty_like(X)
    for i, t, picks in _sequential_sets(graph, cfg, T):
        stats.visited += 1
        total = 0.0
        count = 0
        for s, verts in picks:
            total += X[verts, s].sum()
            count += verts.size
        if count == 0:
            stats.empty_neighborhoods += 1
            Y[i, t] = X[i, t]
        else:
            Y[i, t] = total / count
    return Y


def mean_filter_batch(X, asp: SelectionMatrix) -> np.ndarray:
    """Matrix form of the mean filter: ``y = diag(1/d) A x`` with ``x = vec(X)``.

    ``d`` are the row degrees of ``asp``; boundary rows simply have fewer
    entries.  Raises ``ValueError`` naming the first (vertex, instant) whose
    row is empty.
    """
    X = as_signal(X)
    n = X.shape[0]
    if X.size != asp.dim:
        raise ValueError(f"signal of shape {X.shape} does not match product dimension {asp.dim}")
    m = asp.matrix
    degree = np.diff(m.indptr).astype(np.float64)
    empty = np.flatnonzero(degree == 0)
    if empty.size:
        i, t = unflatten_index(empty[0], n)
        raise ValueError(f"zero-degree row at vertex {i}, instant {t}: mean undefined; "
                         "enable self-inclusion")
    return unvec((m @ vec(X)) / degree, n)


def _row_medians(m: sp.csr_matrix, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Median of ``x`` over the stored columns of each requested row.

    Rows are padded with NaN to a common width; ``np.sort`` moves NaN to the
    end so the central order statistics are read off at ``(d-1)//2`` and
    ``d//2``.  Empty rows return NaN.
    """
    starts = m.indptr[rows]
    degree = m.indptr[rows + 1] - starts
    out = np.full(rows.size, np.nan)
    width = int(degree.max()) if rows.size else 0
    if width == 0:
        return out
    for lo in range(0, rows.size, _MEDIAN_CHUNK_ROWS):
        hi = min(lo + _MEDIAN_CHUNK_ROWS, rows.size)
        d = degree[lo:hi]
        w = int(d.max()) if d.size else 0
        if w == 0:
            continue
        pad = np.full((hi - lo, w), np.nan)
        local = np.repeat(np.arange(hi - lo), d)
        rank = np.arange(local.size) - np.repeat(np.cumsum(d) - d, d)
        src = np.repeat(starts[lo:hi], d) + rank
        pad[local, rank] = x[m.indices[src]]
        pad.sort(axis=1)
        has = d > 0
        r = np.flatnonzero(has)
        low = pad[r, (d[has] - 1) // 2]
        high = pad[r, d[has] // 2]
        out[lo + r] = (low + high) / 2
    return out


def median_filter_graph(X, asp: SelectionMatrix, recursive: bool = False,
                        stats: Optional[FilterStats] = None) -> np.ndarray:
    """Median over the rows of a product graph.

    Even-sized neighbourhoods return the midpoint of the two central values.
    With ``recursive=True`` instants are processed in order and outputs at
    earlier instants replace raw values in later neighbourhoods; values at
    the current and later instants are always raw.  Empty neighbourhoods
    pass the input through.
    """
    X = as_signal(X)
    n, T = X.shape
    if X.size != asp.dim:
        raise ValueError(f"signal of shape {X.shape} does not match product dimension {asp.dim}")
    m = asp.matrix
    stats = stats if stats is not None else FilterStats()
    x = vec(X)
    if not recursive:
        y = _row_medians(m, x, np.arange(x.size))
        empty = np.isnan(y)
        y[empty] = x[empty]
        n_empty = int(empty.sum())
    else:
        work = x.copy()
        y = np.empty_like(x)
        n_empty = 0
        for t in range(T):
            rows = np.arange(t * n, (t + 1) * n)
            out = _row_medians(m, work, rows)
            empty = np.isnan(out)
            out[empty] = x[rows[empty]]
            n_empty += int(empty.sum())
            y[rows] = out
            work[rows] = out
    stats.visited += x.size
    stats.empty_neighborhoods += n_empty
    return unvec(y, n)


def median_filter(X, cfg: FilterConfig, graph: Graph, recursive: bool = False,
                  stats: Optional[FilterStats] = None) -> np.ndarray:
    """Median filter over the neighbourhoods selected by ``cfg`` on ``graph``."""
    X = as_signal(X, graph.n_vertices, cfg.temporal.T)
    return median_filter_graph(X, selection_graph(graph, cfg), recursive, stats)


def apply_filter(X, cfg: FilterConfig, graph: Graph, recursive: bool = False,
                 asp: Optional[SelectionMatrix] = None) -> np.ndarray:
    """Run the filter named by ``cfg.kind`` in its fastest form.

    The mean uses the batch (matrix) form, the median the row-gather form.
    ``asp`` may be passed to reuse a prebuilt product graph.
    """
    X = as_signal(X, graph.n_vertices, cfg.temporal.T)
    if asp is None:
        asp = selection_graph(graph, cfg)
    if cfg.kind == "mean":
        return mean_filter_batch(X, asp)
    return median_filter_graph(X, asp, recursive=recursive)
