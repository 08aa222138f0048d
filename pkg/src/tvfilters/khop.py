"""K-hop neighbourhood graphs, plain and attenuated."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from .graph import Graph, SelectionMatrix, logical_adjacency

# beyond this many hops the walk-count sums lose integer precision on dense graphs
MAX_EXACT_HOPS = 64


@dataclass(frozen=True)
class KHopParams:
    """Spatial neighbourhood size ``K``, attenuation ``beta`` and threshold ``gamma``."""

    K: int = 1
    beta: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not (self.gamma >= 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be a finite nonnegative number, got {self.gamma}")


def _as_matrix(a, use_weights: bool) -> sp.csr_matrix:
    if isinstance(a, Graph):
        if use_weights:
            return a.adjacency
        return logical_adjacency(a).matrix.astype(np.float64)
    if isinstance(a, SelectionMatrix):
        return a.matrix.astype(np.float64)
    return sp.csr_matrix(a, dtype=np.float64)


def khop_unweighted(a: Union[SelectionMatrix, Graph], K: int) -> SelectionMatrix:
    """Vertices within hop distance ``K`` of each other, self-pairs excluded.

    Equivalent to ``((A + A^2 + ... + A^K) > 0) - I`` but computed as a
    breadth-first frontier expansion on boolean matrices so that walk counts
    never grow.  Stops early once the reachability pattern saturates.
    """
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    adj = sp.csr_matrix(_as_matrix(a, use_weights=False) != 0)
    n = adj.shape[0]
    reach = adj.copy()
    frontier = adj
    for _ in range(1, K):
        frontier = sp.csr_matrix((frontier @ adj) != 0)
        grown = sp.csr_matrix(reach + frontier)
        if grown.nnz == reach.nnz:
            break
        reach = grown
    reach = reach.tolil()
    reach.setdiag(False)
    reach = sp.csr_matrix(reach)
    reach.eliminate_zeros()
    assert reach.shape == (n, n)
    return SelectionMatrix.from_mask(reach, "khop")


def walk_sum(a: Union[SelectionMatrix, Graph], K: int, beta: float,
             use_weights: bool = False) -> sp.csr_matrix:
    """``sum_{k=1..K} beta**k A**k`` in float64.

    On a binary adjacency ``A**k`` holds exact integer walk counts, which is
    what the threshold is compared against.  Terms are accumulated in order of
    increasing ``k``.
    """
    if K > MAX_EXACT_HOPS:
        raise ValueError(f"K > {MAX_EXACT_HOPS} exceeds the exact walk-count range")
    adj = _as_matrix(a, use_weights)
    power = adj
    total = beta ** 1 * power
    for k in range(2, K + 1):
        power = power @ adj
        total = total + beta ** k * power
    return sp.csr_matrix(total)


def khop_attenuated(a: Union[SelectionMatrix, Graph], p: KHopParams,
                    use_weights: bool = False) -> SelectionMatrix:
    """Attenuated k-hop graph ``((sum_k beta**k A**k) > gamma) - I``.

    The comparison is strict and the diagonal is cleared after thresholding
    (self-pairs removed, never negative).  By default the binary logical
    adjacency feeds the power sum; pass a :class:`Graph` with
    ``use_weights=True`` to use its edge weights instead.

    Note:
        With ``gamma = 0`` any pair joined by a walk of length ``<= K`` is
        selected, which with ``beta = 1`` reproduces :func:`khop_unweighted`.
    """
    s = walk_sum(a, p.K, p.beta, use_weights=use_weights)
    mask = sp.csr_matrix(s > p.gamma).tolil()
    mask.setdiag(False)
    mask = sp.csr_matrix(mask)
    mask.eliminate_zeros()
    return SelectionMatrix.from_mask(mask, "khop")
