"""Command-line front end: ``tvfilters {build-graph,filter,sweep,inspect}``."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import harness
from .filters import FilterStats, apply_filter, mean_filter_sequential, selection_graph
from .graph import build_knn_graph
from .io import read_matrix_csv, write_coo, write_edge_list, write_signal_csv
from .product import effective_window

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


def _g(v) -> str:
    return f"{v:.6g}"


def _read(path, what, header=False) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} file not found: {p}", EXIT_USAGE)
    try:
        return read_matrix_csv(p, header=header, what=what)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _graph_from_args(args):
    coords = _read(args.coords, "coordinates", args.header)
    try:
        return build_knn_graph(coords, args.knn, args.weighting)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_build_graph(args) -> int:
    graph = _graph_from_args(args)
    write_edge_list(args.out, graph)
    deg = np.diff(graph.adjacency.indptr)
    print(f"N={graph.n_vertices} edges={graph.n_edges} "
          f"min_degree={_g(deg.min())} max_degree={_g(deg.max())}")
    return EXIT_OK


def _config_from_args(args, T):
    try:
        entry = harness.FilterEntry(
            label=args.kind, kind=args.kind, K=args.K, M=args.M, alpha=args.alpha,
            beta=args.beta, gamma=args.gamma, gamma_time=args.gamma_time,
            include_self=args.include_self, recursive=args.recursive, product=args.product)
        return entry, entry.config(T)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


def _warn_window(args, gamma_t):
    if args.product == "selecting" and effective_window(args.M, args.alpha, gamma_t) == 0:
        print(f"warning: alpha={_g(args.alpha)} <= gamma={_g(gamma_t)}; temporal window "
              "collapsed to l=0 (same-instant neighbours only)", file=sys.stderr)


def cmd_filter(args) -> int:
    X = _read(args.signal, "signal", args.header)
    graph = _graph_from_args(args)
    if X.shape[0] != graph.n_vertices:
        raise CliError(f"signal has {X.shape[0]} rows but coordinates give "
                       f"{graph.n_vertices} nodes")
    entry, cfg = _config_from_args(args, X.shape[1])
    _warn_window(args, cfg.temporal.gamma)
    start = time.perf_counter()
    asp = selection_graph(graph, cfg)
    try:
        if args.sequential and cfg.kind == "mean":
            stats = FilterStats()
            Y = mean_filter_sequential(X, cfg, graph, stats)
            if stats.empty_neighborhoods:
                print(f"note: {stats.empty_neighborhoods} empty neighbourhoods passed through",
                      file=sys.stderr)
        else:
            Y = apply_filter(X, cfg, graph, recursive=entry.recursive, asp=asp)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    elapsed = time.perf_counter() - start
    write_signal_csv(args.out, Y)
    print(f"elapsed={_g(elapsed)} s nnz={asp.nnz}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        spec = harness.load_spec(args.spec)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except ValueError as exc:
        raise CliError(f"invalid spec: {exc}", EXIT_USAGE) from None
    if args.seed is not None:
        spec.seed = args.seed
    if args.workers is not None:
        spec.workers = args.workers
    try:
        result = harness.run_sweep(spec)
    except (ValueError, FileNotFoundError) as exc:
        raise CliError(str(exc)) from None
    paths = harness.write_sweep(result, spec, args.out_dir)
    for line in harness.sweep_summary(result):
        print(line)
    print(f"wrote {paths['trials']} and {paths['aggregate']}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    graph = _graph_from_args(args)
    if args.T < 2:
        raise CliError("T must be >= 2", EXIT_USAGE)
    _, cfg = _config_from_args(args, args.T)
    _warn_window(args, cfg.temporal.gamma)
    asp = selection_graph(graph, cfg)
    deg = np.diff(asp.matrix.indptr)
    print(f"N={graph.n_vertices} T={args.T} window={cfg.window} dim={asp.dim} nnz={asp.nnz} "
          f"min_degree={deg.min()} max_degree={deg.max()} mean_degree={_g(deg.mean())}")
    if args.export:
        write_coo(args.export, asp.matrix)
        print(f"wrote {args.export}")
    return EXIT_OK


def _add_graph_flags(p):
    p.add_argument("--coords", required=True, help="coordinates CSV, one row per node")
    p.add_argument("--knn", type=int, default=5, help="neighbours per node (default 5)")
    p.add_argument("--weighting", choices=["binary", "inverse-distance", "gaussian"],
                   default="binary")
    p.add_argument("--header", action="store_true", help="input CSVs have a header row")


def _add_filter_flags(p):
    p.add_argument("--K", type=int, default=1, help="max hop count")
    p.add_argument("--M", type=int, default=1, help="temporal half-window")
    p.add_argument("--alpha", type=float, default=1.0, help="temporal attenuation")
    p.add_argument("--beta", type=float, default=1.0, help="spatial attenuation")
    p.add_argument("--gamma", type=float, default=0.0, help="selection threshold")
    p.add_argument("--gamma-time", type=float, default=None,
                   help="separate temporal threshold (defaults to --gamma)")
    p.add_argument("--kind", choices=["mean", "median"], default="mean")
    p.add_argument("--product", choices=["selecting", "strong"], default="selecting")
    p.add_argument("--no-self", dest="include_self", action="store_false",
                   help="exclude the centre value from its own neighbourhood")
    p.add_argument("--recursive", action="store_true", help="recursive median")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvfilters",
                                     description="Mean/median filters on time-vertex graph signals.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="k-NN sensor graph to an edge-list CSV")
    _add_graph_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("filter", help="filter an N x T signal CSV")
    p.add_argument("--signal", required=True, help="N x T signal CSV")
    _add_graph_flags(p)
    _add_filter_flags(p)
    p.add_argument("--sequential", action="store_true",
                   help="use the node-by-node mean instead of the matrix form")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("sweep", help="run an SNR sweep from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel trials (default ${harness.THREADS_ENV} or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="statistics of the product selection graph")
    _add_graph_flags(p)
    _add_filter_flags(p)
    p.add_argument("--T", type=int, required=True, help="number of instants")
    p.add_argument("--export", default=None, help="write the matrix as 'row col value' text")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.code == EXIT_USAGE and "not found" not in str(exc):
            parser.print_usage(sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
