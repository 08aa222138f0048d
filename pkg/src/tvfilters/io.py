"""CSV readers and writers for coordinates, signals, edge lists and sparse matrices."""
from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import Graph


def read_matrix_csv(path, header: bool = False, what: str = "matrix") -> np.ndarray:
    """Read a numeric CSV into a 2-D float array.

    Malformed rows and non-finite values are reported with their 1-based
    row/column position in the file.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{what} file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        for lineno, row in enumerate(reader, start=2 if header else 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise ValueError(f"{path}: malformed value at row {lineno}: {exc}") from None
            if rows and len(values) != len(rows[0]):
                raise ValueError(f"{path}: row {lineno} has {len(values)} columns, "
                                 f"expected {len(rows[0])}")
            for col, v in enumerate(values, start=1):
                if not np.isfinite(v):
                    raise ValueError(f"{path}: non-finite value at row {lineno}, column {col}")
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def format_float(v: float) -> str:
    """Shortest round-tripping representation."""
    return repr(float(v))


def signal_to_csv(X: np.ndarray) -> str:
    buf = io.StringIO()
    for row in np.asarray(X, dtype=np.float64):
        buf.write(",".join(format_float(v) for v in row))
        buf.write("\n")
    return buf.getvalue()


def write_signal_csv(path, X: np.ndarray) -> None:
    """Write an ``N x T`` matrix with full float precision, no header."""
    _write_text(path, signal_to_csv(X))


def write_edge_list(path, graph: Graph) -> None:
    """Edge list CSV with header ``i,j,weight``; one line per undirected edge."""
    lines = ["i,j,weight"]
    lines += [f"{i},{j},{format_float(w)}" for i, j, w in graph.edges()]
    _write_text(path, "\n".join(lines) + "\n")


def read_edge_list(path, n_vertices: int) -> Graph:
    data = read_matrix_csv(path, header=True, what="edge list")
    return Graph.from_edges(n_vertices, [(int(i), int(j), w) for i, j, w in data])


def write_coo(path, m) -> None:
    """Sparse matrix as ``row col value`` lines (0-based), row-major order."""
    m = sp.csr_matrix(m)
    m.sort_indices()
    coo = m.tocoo()
    with open(path, "w") as fh:
        fh.write(f"% {m.shape[0]} {m.shape[1]} {m.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v}\n")


def read_coo(path) -> sp.csr_matrix:
    with open(path) as fh:
        head = fh.readline().lstrip("% ").split()
        n_rows, n_cols = int(head[0]), int(head[1])
        body = np.loadtxt(fh, ndmin=2)
    if body.size == 0:
        return sp.csr_matrix((n_rows, n_cols))
    return sp.csr_matrix((body[:, 2], (body[:, 0].astype(int), body[:, 1].astype(int))),
                         shape=(n_rows, n_cols))


def _write_text(path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
