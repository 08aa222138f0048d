import subprocess
import sys

import numpy as np
import pytest

from tvfilters.cli import main
from tvfilters.filters import apply_filter
from tvfilters.graph import build_knn_graph
from tvfilters.harness import FilterEntry
from tvfilters.io import read_coo, read_edge_list, read_matrix_csv, signal_to_csv, write_signal_csv


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(0)
    coords = rng.random((15, 2))
    X = rng.normal(size=(15, 10))
    write_signal_csv(tmp_path / "coords.csv", coords)
    write_signal_csv(tmp_path / "signal.csv", X)
    return tmp_path, coords, X


def test_build_graph_collinear(tmp_path, capsys):
    (tmp_path / "c.csv").write_text("0\n1\n2\n")
    assert main(["build-graph", "--coords", str(tmp_path / "c.csv"), "--knn", "1",
                 "--out", str(tmp_path / "e.csv")]) == 0
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines == ["i,j,weight", "0,1,1.0", "1,2,1.0"]
    assert "edges=2" in capsys.readouterr().out


def test_build_graph_degree_audit(tmp_path, capsys):
    coords = np.random.default_rng(1).random((500, 2))
    write_signal_csv(tmp_path / "c.csv", coords)
    assert main(["build-graph", "--coords", str(tmp_path / "c.csv"), "--knn", "5",
                 "--out", str(tmp_path / "e.csv")]) == 0
    g = read_edge_list(tmp_path / "e.csv", 500)
    assert np.diff(g.adjacency.indptr).min() >= 5


def test_missing_file_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["build-graph", "--coords", str(missing), "--out", str(tmp_path / "e")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_malformed_rows(tmp_path, capsys):
    (tmp_path / "c.csv").write_text("0,1\n1,x\n")
    assert main(["build-graph", "--coords", str(tmp_path / "c.csv"), "--knn", "1",
                 "--out", str(tmp_path / "e.csv")]) == 1
    assert "row 2" in capsys.readouterr().err


def test_filter_constant_input(tmp_path):
    coords = np.random.default_rng(2).random((8, 2))
    write_signal_csv(tmp_path / "c.csv", coords)
    write_signal_csv(tmp_path / "s.csv", np.full((8, 6), 3.0))
    for kind in ("mean", "median"):
        out = tmp_path / f"{kind}.csv"
        assert main(["filter", "--signal", str(tmp_path / "s.csv"), "--coords",
                     str(tmp_path / "c.csv"), "--knn", "3", "--K", "2", "--M", "2",
                     "--kind", kind, "--out", str(out)]) == 0
        assert out.read_text() == (tmp_path / "s.csv").read_text()


@pytest.mark.parametrize("kind", ["mean", "median"])
def test_filter_matches_library(dataset, kind, capsys):
    tmp, coords, X = dataset
    out = tmp / "y.csv"
    args = ["filter", "--signal", str(tmp / "signal.csv"), "--coords", str(tmp / "coords.csv"),
            "--knn", "4", "--K", "2", "--M", "3", "--alpha", "0.8", "--beta", "0.5",
            "--gamma", "0.3", "--kind", kind, "--out", str(out)]
    assert main(args) == 0
    graph = build_knn_graph(coords, 4)
    entry = FilterEntry(kind, kind, K=2, M=3, alpha=0.8, beta=0.5, gamma=0.3)
    Y = apply_filter(X, entry.config(10), graph)
    assert out.read_text() == signal_to_csv(Y)
    assert "nnz=" in capsys.readouterr().out


def test_sequential_flag_agrees(dataset):
    tmp, _, _ = dataset
    common = ["filter", "--signal", str(tmp / "signal.csv"), "--coords", str(tmp / "coords.csv"),
              "--knn", "4", "--K", "2", "--M", "2"]
    assert main(common + ["--out", str(tmp / "a.csv")]) == 0
    assert main(common + ["--sequential", "--out", str(tmp / "b.csv")]) == 0
    np.testing.assert_allclose(read_matrix_csv(tmp / "a.csv"), read_matrix_csv(tmp / "b.csv"),
                               atol=1e-12)


def test_window_collapse_warning(dataset, capsys):
    tmp, _, _ = dataset
    assert main(["filter", "--signal", str(tmp / "signal.csv"), "--coords",
                 str(tmp / "coords.csv"), "--M", "2", "--alpha", "0.5", "--gamma", "0.5",
                 "--out", str(tmp / "y.csv")]) == 0
    assert "collapsed to l=0" in capsys.readouterr().err


def test_shape_mismatch(dataset, capsys):
    tmp, _, _ = dataset
    write_signal_csv(tmp / "short.csv", np.ones((4, 10)))
    assert main(["filter", "--signal", str(tmp / "short.csv"), "--coords",
                 str(tmp / "coords.csv"), "--out", str(tmp / "y.csv")]) == 1
    assert "rows" in capsys.readouterr().err


def test_zero_degree_without_self(dataset, capsys):
    tmp, _, _ = dataset
    assert main(["filter", "--signal", str(tmp / "signal.csv"), "--coords",
                 str(tmp / "coords.csv"), "--gamma", "5", "--no-self",
                 "--out", str(tmp / "y.csv")]) == 1
    assert "zero-degree" in capsys.readouterr().err


def test_invalid_params_exit_2(dataset, capsys):
    tmp, _, _ = dataset
    assert main(["filter", "--signal", str(tmp / "signal.csv"), "--coords",
                 str(tmp / "coords.csv"), "--beta", "1.5", "--out", str(tmp / "y.csv")]) == 2
    assert "beta" in capsys.readouterr().err


SPEC = """
[experiment]
n_nodes = 20
n_instants = 12
knn_k = 4
input_snrs = -5, 0, 5
trials = 5
seed = 4

[filter mean]
kind = mean
K = 2
M = 2
alpha = 0.8
beta = 0.5
gamma = 0.3

[filter median]
kind = median
K = 1
"""


def test_sweep_outputs(tmp_path, capsys):
    (tmp_path / "spec.ini").write_text(SPEC)
    assert main(["sweep", "--spec", str(tmp_path / "spec.ini"), "--out-dir",
                 str(tmp_path / "a")]) == 0
    trials = (tmp_path / "a" / "trials.csv").read_text().splitlines()
    aggregate = (tmp_path / "a" / "aggregate.csv").read_text().splitlines()
    assert len(trials) == 1 + 30
    assert len(aggregate) == 1 + 6
    out = capsys.readouterr().out
    assert sum(1 for line in out.splitlines() if " in=" in line) == 6

    assert main(["sweep", "--spec", str(tmp_path / "spec.ini"), "--out-dir",
                 str(tmp_path / "b")]) == 0
    for name in ("trials.csv", "aggregate.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "PCG64" in (tmp_path / "a" / "manifest.txt").read_text()


def test_sweep_bad_spec(tmp_path, capsys):
    (tmp_path / "spec.ini").write_text("[experiment]\ntrials = 0\n[filter a]\n")
    assert main(["sweep", "--spec", str(tmp_path / "spec.ini"), "--out-dir",
                 str(tmp_path / "o")]) == 2
    assert main(["sweep", "--spec", str(tmp_path / "missing.ini"), "--out-dir",
                 str(tmp_path / "o")]) == 2


def test_inspect_export(dataset, capsys):
    tmp, coords, _ = dataset
    assert main(["inspect", "--coords", str(tmp / "coords.csv"), "--knn", "3", "--K", "2",
                 "--M", "2", "--T", "6", "--export", str(tmp / "asp.txt")]) == 0
    m = read_coo(tmp / "asp.txt")
    assert m.shape == (90, 90)
    assert (m != m.T).nnz == 0
    assert f"nnz={m.nnz}" in capsys.readouterr().out


def test_usage_error_nonzero():
    proc = subprocess.run([sys.executable, "-m", "tvfilters", "filter"], capture_output=True,
                          text=True)
    assert proc.returncode == 2
    assert "usage" in proc.stderr
