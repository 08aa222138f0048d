import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_knn
from tvfilters.graph import (Graph, SelectionMatrix, build_knn_graph, degree_vector,
                             logical_adjacency)


def path_graph(weights):
    return Graph.from_edges(len(weights) + 1, [(i, i + 1, w) for i, w in enumerate(weights)])


class TestGraph:
    def test_laplacian_is_degree_minus_adjacency(self):
        g = path_graph([0.5, 2.3])
        L = g.laplacian().toarray()
        np.testing.assert_allclose(L, [[0.5, -0.5, 0], [-0.5, 2.8, -2.3], [0, -2.3, 2.3]])
        np.testing.assert_allclose(L, L.T)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            Graph(sp.csr_matrix(np.array([[0, 1.0], [0, 0]])))

    def test_rejects_self_loops_and_negative_weights(self):
        with pytest.raises(ValueError, match="self-loops"):
            Graph(sp.csr_matrix(np.eye(2)))
        with pytest.raises(ValueError, match="nonnegative"):
            Graph(sp.csr_matrix(np.array([[0, -1.0], [-1.0, 0]])))

    def test_edges_listed_once(self):
        g = path_graph([1.0, 1.0, 1.0])
        assert list(g.edges()) == [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]
        assert g.n_edges == 3


class TestSelectionMatrix:
    def test_entries_must_be_one(self):
        with pytest.raises(ValueError, match="equal 1"):
            SelectionMatrix(sp.csr_matrix(np.array([[0, 2], [2, 0]])), "khop")

    def test_unknown_tag(self):
        with pytest.raises(ValueError, match="tag"):
            SelectionMatrix(sp.csr_matrix((2, 2)), "bogus")

    def test_explicit_zeros_are_dropped(self):
        m = sp.csr_matrix((np.array([1, 0]), np.array([1, 0]), np.array([0, 1, 2])), shape=(2, 2))
        s = SelectionMatrix(m, "khop")
        assert s.nnz == 1


class TestKnnGraph:
    def test_collinear_k1(self):
        g = build_knn_graph([[0.0], [1.0], [2.0]], k=1)
        assert [(i, j) for i, j, _ in g.edges()] == [(0, 1), (1, 2)]

    def test_complete_when_k_is_n_minus_1(self):
        rng = np.random.default_rng(3)
        g = build_knn_graph(rng.random((7, 2)), k=6)
        np.testing.assert_array_equal(g.adjacency.toarray(), 1 - np.eye(7))

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_bruteforce_oracle(self, seed):
        rng = np.random.default_rng(seed)
        coords = rng.random((10, 2))
        g = build_knn_graph(coords, k=3)
        np.testing.assert_array_equal(g.adjacency.toarray(), brute_knn(coords, 3))

    def test_weightings(self):
        coords = np.array([[0.0, 0.0], [3.0, 4.0], [10.0, 0.0]])
        inv = build_knn_graph(coords, 1, "inverse-distance").adjacency.toarray()
        assert inv[0, 1] == pytest.approx(1 / 5)
        gau = build_knn_graph(coords, 1, "gaussian", sigma=5.0).adjacency.toarray()
        assert gau[0, 1] == pytest.approx(np.exp(-1.0))

    def test_k_too_large(self):
        with pytest.raises(ValueError, match="k must satisfy"):
            build_knn_graph(np.zeros((3, 2)) + np.arange(3)[:, None], 3)

    def test_duplicates_rejected_under_inverse_distance(self):
        coords = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]
        with pytest.raises(ValueError, match="zero distance"):
            build_knn_graph(coords, 1, "inverse-distance")
        # binary weighting tolerates coincident sensors
        assert build_knn_graph(coords, 1).n_edges >= 1

    def test_non_finite_coordinates(self):
        with pytest.raises(ValueError, match="finite"):
            build_knn_graph([[0.0], [np.nan], [1.0]], 1)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(2, 25), st.integers(1, 3)),
                  elements=st.floats(-1e3, 1e3)),
           st.integers(1, 24))
    def test_symmetric_and_loop_free(self, coords, k):
        k = min(k, coords.shape[0] - 1)
        a = build_knn_graph(coords, k).adjacency
        assert (a != a.T).nnz == 0
        assert not a.diagonal().any()
        # every node keeps at least its own k choices after symmetrization
        assert np.diff(a.indptr).min() >= k


class TestLogicalAdjacency:
    def test_weighted_path(self):
        la = logical_adjacency(path_graph([0.5, 2.3]))
        np.testing.assert_array_equal(la.toarray(), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    def test_empty_graph(self):
        la = logical_adjacency(Graph(sp.csr_matrix((4, 4))))
        assert la.nnz == 0 and la.dim == 4

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_indicator_oracle(self, seed):
        rng = np.random.default_rng(seed)
        w = np.triu(rng.random((9, 9)) * (rng.random((9, 9)) < 0.4), 1)
        w = w + w.T
        la = logical_adjacency(Graph(sp.csr_matrix(w)))
        np.testing.assert_array_equal(la.toarray(), (w != 0).astype(int))

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        w = np.triu(rng.random((8, 8)) * (rng.random((8, 8)) < 0.5), 1)
        once = logical_adjacency(Graph(sp.csr_matrix(w + w.T)))
        twice = logical_adjacency(once)
        np.testing.assert_array_equal(once.toarray(), twice.toarray())


class TestDegreeVector:
    def test_path_p3(self):
        np.testing.assert_array_equal(degree_vector(path_graph([1.0, 1.0])), [1, 2, 1])

    def test_complete_k4(self):
        k4 = SelectionMatrix.from_mask(1 - np.eye(4), "khop")
        np.testing.assert_array_equal(degree_vector(k4), [3, 3, 3, 3])

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_row_sums(self, seed):
        m = sp.random(12, 12, density=0.3, format="csr", random_state=seed)
        np.testing.assert_allclose(degree_vector(m), m.toarray().sum(axis=1))

    def test_binary_degree_is_stored_count(self):
        rng = np.random.default_rng(2)
        mask = rng.random((10, 10)) < 0.3
        s = SelectionMatrix.from_mask(mask, "khop")
        np.testing.assert_array_equal(degree_vector(s), np.diff(s.matrix.indptr))
