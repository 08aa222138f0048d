"""Noise injection, SNR measurement and reproducible denoising sweeps."""
from __future__ import annotations

import configparser
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .filters import FilterConfig, apply_filter, as_signal, selection_graph
from .graph import Graph, build_knn_graph
from .io import format_float, read_matrix_csv
from .khop import KHopParams
from .product import TemporalParams

RNG_ALGORITHM = "numpy PCG64 seeded by SeedSequence([seed, *stream_key])"
THREADS_ENV = "TVFILTERS_THREADS"

# stream keys; noise streams append (snr index, trial)
_COORDS_STREAM = 1
_SIGNAL_STREAM = 2
_NOISE_STREAM = 3


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; same inputs give the same stream."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_for(int(seed))


def snr_db(X, Y) -> float:
    """``10 log10(||X||_F^2 / ||X - Y||_F^2)`` in decibels.

    Returns ``inf`` when ``Y`` equals ``X``; raises for an all-zero ``X``.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Y.shape}")
    signal = np.sum(X * X)
    if signal == 0:
        raise ValueError("SNR undefined for an all-zero reference signal")
    err = np.sum((X - Y) ** 2)
    if err == 0:
        return float("inf")
    return float(10.0 * np.log10(signal / err))


def _scale_to_snr(X: np.ndarray, noise: np.ndarray, target_snr_db: float) -> np.ndarray:
    signal = np.sum(X * X)
    if signal == 0:
        raise ValueError("cannot set an SNR for an all-zero signal")
    energy = np.sum(noise * noise)
    if energy == 0:
        raise ValueError("drawn noise has zero energy")
    wanted = signal / 10.0 ** (target_snr_db / 10.0)
    return noise * np.sqrt(wanted / energy)


def add_white_noise(X, target_snr_db: float, seed=0) -> np.ndarray:
    """Add i.i.d. Gaussian noise rescaled to hit ``target_snr_db`` exactly.

    The drawn noise matrix is scaled so that its energy is
    ``||X||_F^2 / 10**(snr/10)``; the realised SNR then matches the target up
    to rounding.  ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    X = np.asarray(X, dtype=np.float64)
    noise = _as_rng(seed).standard_normal(X.shape)
    return X + _scale_to_snr(X, noise, target_snr_db)


def add_mixed_noise(X, target_snr_db: float, seed=0, impulse_density: float = 0.05,
                    impulse_share: float = 0.5) -> np.ndarray:
    """Gaussian plus sparse impulse noise at an exact total SNR.

    A fraction ``impulse_density`` of entries receive a random-sign impulse.
    ``impulse_share`` is the fraction of the noise energy carried by the
    impulses before the final rescale.
    """
    X = np.asarray(X, dtype=np.float64)
    if not 0 < impulse_density <= 1 or not 0 <= impulse_share <= 1:
        raise ValueError("impulse_density must lie in (0, 1] and impulse_share in [0, 1]")
    rng = _as_rng(seed)
    gauss = rng.standard_normal(X.shape)
    hits = rng.random(X.shape) < impulse_density
    if not hits.any():
        hits.flat[rng.integers(X.size)] = True
    impulses = np.where(hits, rng.choice([-1.0, 1.0], size=X.shape), 0.0)
    gauss *= np.sqrt((1 - impulse_share) / np.mean(gauss * gauss))
    impulses *= np.sqrt(impulse_share / np.mean(impulses * impulses))
    return X + _scale_to_snr(X, gauss + impulses, target_snr_db)


def heat_kernel(graph: Graph, smoothness: float) -> np.ndarray:
    """Dense ``expm(-smoothness * L)`` via the Laplacian eigendecomposition.

    ``smoothness = inf`` gives the projection onto the null space of ``L``
    (per-component constants).
    """
    lam, U = np.linalg.eigh(graph.laplacian().toarray())
    lam = np.clip(lam, 0.0, None)
    tol = 1e-9 * max(1.0, lam.max(initial=0.0))
    with np.errstate(invalid="ignore", over="ignore"):
        gain = np.where(lam <= tol, 1.0, np.exp(-smoothness * lam))
    return (U * gain) @ U.T


def synthesize_smooth_signal(graph: Graph, T: int, smoothness: float = 2.0, seed: int = 0,
                             n_modes: int = 3, trend_amplitude: float = 1.0,
                             offset: float = 0.0) -> np.ndarray:
    """Spatially and temporally smooth ``N x T`` test signal.

    Each vertex carries a sum of ``n_modes`` low-frequency sinusoids over the
    ``T`` instants (mode ``j`` completes ``j`` cycles) with Gaussian
    amplitudes and uniform phases.  Every column is then diffused with the
    graph heat kernel ``expm(-smoothness * L)``.  A spatially constant slow
    trend ``trend_amplitude * sin(2 pi t / T)`` and ``offset`` are added
    last; neither changes the Laplacian quadratic form of a column.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    if smoothness < 0:
        raise ValueError("smoothness must be nonnegative")
    rng = rng_for(seed, _SIGNAL_STREAM)
    n = graph.n_vertices
    t = np.arange(T) / T
    amps = rng.standard_normal((n, n_modes))
    phases = rng.uniform(0, 2 * np.pi, size=(n, n_modes))
    freqs = np.arange(1, n_modes + 1)
    base = np.einsum("nm,nmt->nt", amps,
                     np.sin(2 * np.pi * freqs[None, :, None] * t[None, None, :] + phases[:, :, None]))
    X = heat_kernel(graph, smoothness) @ base
    X += trend_amplitude * np.sin(2 * np.pi * t)[None, :] + offset
    return X


@dataclass(frozen=True)
class FilterEntry:
    """A labelled filter setting in a sweep, independent of the signal length."""

    label: str
    kind: str = "mean"
    K: int = 1
    M: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    gamma_time: Optional[float] = None
    include_self: bool = True
    recursive: bool = False
    product: str = "selecting"

    def config(self, T: int) -> FilterConfig:
        gamma_t = self.gamma if self.gamma_time is None else self.gamma_time
        return FilterConfig(
            khop=KHopParams(self.K, self.beta, self.gamma),
            temporal=TemporalParams(T, self.M, self.alpha, gamma_t),
            kind=self.kind,
            include_self=self.include_self,
            product=self.product,
        )


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one sweep."""

    filters: list[FilterEntry]
    input_snrs: list[float]
    trials: int = 1
    seed: int = 0
    knn_k: int = 5
    weighting: str = "binary"
    # dataset: synthetic unless signal_path is given
    signal_path: Optional[str] = None
    coords_path: Optional[str] = None
    header: bool = False
    n_nodes: int = 100
    n_instants: int = 120
    smoothness: float = 2.0
    offset: float = 0.0
    noise: str = "gaussian"
    impulse_density: float = 0.05
    impulse_share: float = 0.5
    record_timing: bool = False
    workers: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.filters:
            raise ValueError("at least one filter is required")
        if not self.input_snrs or not all(np.isfinite(self.input_snrs)):
            raise ValueError("input_snrs must be a non-empty list of finite values")
        labels = [f.label for f in self.filters]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate filter labels: {labels}")
        if self.noise not in ("gaussian", "mixed"):
            raise ValueError(f"unknown noise model {self.noise!r}")
        if (self.signal_path is None) != (self.coords_path is None):
            raise ValueError("signal_path and coords_path must be given together")


class ResultRow(NamedTuple):
    filter: str
    input_snr_db: float
    trial: int
    output_snr_db: float
    wall_time_s: float


RESULT_HEADER = "filter,input_snr_db,trial,output_snr_db,wall_time_s"
AGGREGATE_HEADER = "filter,input_snr_db,mean_output_snr_db,std_output_snr_db"


@dataclass
class ExperimentResult:
    """Per-trial rows, one per (filter, input SNR, trial), in spec order."""

    rows: list[ResultRow] = field(default_factory=list)

    def aggregate(self) -> list[tuple[str, float, float, float]]:
        """Mean and sample standard deviation of output SNR per (filter, input SNR)."""
        groups: dict[tuple[str, float], list[float]] = {}
        for r in self.rows:
            groups.setdefault((r.filter, r.input_snr_db), []).append(r.output_snr_db)
        out = []
        for (label, snr), vals in groups.items():
            v = np.asarray(vals)
            std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
            out.append((label, snr, float(np.mean(v)), std))
        return out

    def mean_output(self, label: str, snr: float) -> float:
        return float(np.mean([r.output_snr_db for r in self.rows
                              if r.filter == label and r.input_snr_db == snr]))

    def to_csv(self) -> str:
        lines = [RESULT_HEADER]
        for r in self.rows:
            lines.append(",".join([r.filter, format_float(r.input_snr_db), str(r.trial),
                                   format_float(r.output_snr_db), format_float(r.wall_time_s)]))
        return "\n".join(lines) + "\n"

    def aggregate_csv(self) -> str:
        lines = [AGGREGATE_HEADER]
        for label, snr, mean, std in self.aggregate():
            lines.append(",".join([label, format_float(snr), format_float(mean), format_float(std)]))
        return "\n".join(lines) + "\n"


def load_dataset(spec: ExperimentSpec) -> tuple[Graph, np.ndarray]:
    """Build the sensor graph and clean signal described by ``spec``."""
    if spec.signal_path is not None:
        X = read_matrix_csv(spec.signal_path, header=spec.header, what="signal")
        coords = read_matrix_csv(spec.coords_path, header=spec.header, what="coordinates")
        if X.shape[0] != coords.shape[0]:
            raise ValueError(f"signal has {X.shape[0]} rows (nodes) but coordinates "
                             f"file has {coords.shape[0]} points")
        graph = build_knn_graph(coords, spec.knn_k, spec.weighting)
        return graph, as_signal(X)
    coords = rng_for(spec.seed, _COORDS_STREAM).random((spec.n_nodes, 2))
    graph = build_knn_graph(coords, spec.knn_k, spec.weighting)
    X = synthesize_smooth_signal(graph, spec.n_instants, spec.smoothness, spec.seed,
                                 offset=spec.offset)
    return graph, X


def _noisy(spec: ExperimentSpec, X: np.ndarray, snr_index: int, trial: int) -> np.ndarray:
    rng = rng_for(spec.seed, _NOISE_STREAM, snr_index, trial)
    snr = spec.input_snrs[snr_index]
    if spec.noise == "mixed":
        return add_mixed_noise(X, snr, rng, spec.impulse_density, spec.impulse_share)
    return add_white_noise(X, snr, rng)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(spec: ExperimentSpec, graph: Optional[Graph] = None,
              X: Optional[np.ndarray] = None) -> ExperimentResult:
    """Filter noisy copies of the clean signal for every (SNR, trial) and record output SNR.

    Each (SNR, trial) draws its noise from its own substream, and every
    filter sees the same noisy realisation, so serial and threaded runs give
    identical rows.  ``graph`` and ``X`` override the dataset in ``spec``.
    """
    if graph is None or X is None:
        graph, X = load_dataset(spec)
    X = as_signal(X, graph.n_vertices).copy()
    X.setflags(write=False)
    T = X.shape[1]
    configs = [(f, f.config(T)) for f in spec.filters]
    graphs = [selection_graph(graph, cfg) for _, cfg in configs]

    def one(job):
        snr_index, trial = job
        Y = _noisy(spec, X, snr_index, trial)
        out = []
        for (entry, cfg), asp in zip(configs, graphs):
            start = time.perf_counter()
            Z = apply_filter(Y, cfg, graph, recursive=entry.recursive, asp=asp)
            elapsed = time.perf_counter() - start
            out.append((entry.label, snr_index, trial, snr_db(X, Z),
                        elapsed if spec.record_timing else float("nan")))
        return out

    jobs = [(s, k) for s in range(len(spec.input_snrs)) for k in range(spec.trials)]
    workers = spec.workers or default_workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(one, jobs))
    else:
        chunks = [one(j) for j in jobs]

    by_key = {(lab, s, k): (o, w) for chunk in chunks for lab, s, k, o, w in chunk}
    rows = []
    for entry in spec.filters:
        for s, snr in enumerate(spec.input_snrs):
            for k in range(spec.trials):
                o, w = by_key[(entry.label, s, k)]
                rows.append(ResultRow(entry.label, float(snr), k, o, w))
    return ExperimentResult(rows)


def write_sweep(result: ExperimentResult, spec: ExperimentSpec, out_dir) -> dict[str, Path]:
    """Write ``trials.csv``, ``aggregate.csv`` and ``manifest.txt`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trials": out_dir / "trials.csv",
        "aggregate": out_dir / "aggregate.csv",
        "manifest": out_dir / "manifest.txt",
    }
    paths["trials"].write_text(result.to_csv())
    paths["aggregate"].write_text(result.aggregate_csv())
    paths["manifest"].write_text(spec_to_text(spec) + f"\n# rng = {RNG_ALGORITHM}\n")
    return paths


# ---------------------------------------------------------------------------
# spec files
# ---------------------------------------------------------------------------

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _bool(text: str) -> bool:
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


def parse_spec(text: str, base_dir=None) -> ExperimentSpec:
    """Parse the INI-style spec format.

    ``[experiment]`` holds dataset, noise and sweep settings; every
    ``[filter <label>]`` section adds one filter.  Relative dataset paths are
    resolved against ``base_dir``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    if "experiment" not in cp:
        raise ValueError("spec needs an [experiment] section")
    ex = cp["experiment"]
    known = {"dataset", "signal_path", "coords_path", "header", "knn_k", "weighting",
             "n_nodes", "n_instants", "smoothness", "offset", "input_snrs", "trials",
             "seed", "noise", "impulse_density", "impulse_share", "record_timing",
             "workers"}
    unknown = set(ex) - known
    if unknown:
        raise ValueError(f"unknown [experiment] keys: {sorted(unknown)}")

    def path(key):
        if key not in ex:
            return None
        p = Path(ex[key])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        return str(p)

    dataset = ex.get("dataset", "synthetic")
    if dataset not in ("synthetic", "csv"):
        raise ValueError(f"dataset must be 'synthetic' or 'csv', got {dataset!r}")
    if dataset == "csv" and ("signal_path" not in ex or "coords_path" not in ex):
        raise ValueError("dataset = csv needs signal_path and coords_path")

    filters = []
    for name in cp.sections():
        if name == "experiment":
            continue
        kind_word, _, label = name.partition(" ")
        if kind_word != "filter" or not label.strip():
            raise ValueError(f"unexpected section [{name}]; use [filter <label>]")
        sec = cp[name]
        filters.append(FilterEntry(
            label=label.strip(),
            kind=sec.get("kind", "mean"),
            K=sec.getint("K", 1),
            M=sec.getint("M", 1),
            alpha=sec.getfloat("alpha", 1.0),
            beta=sec.getfloat("beta", 1.0),
            gamma=sec.getfloat("gamma", 0.0),
            gamma_time=sec.getfloat("gamma_time") if "gamma_time" in sec else None,
            include_self=_bool(sec.get("include_self", "true")),
            recursive=_bool(sec.get("recursive", "false")),
            product=sec.get("product", "selecting"),
        ))

    return ExperimentSpec(
        filters=filters,
        input_snrs=[float(v) for v in ex.get("input_snrs", "0").split(",")],
        trials=ex.getint("trials", 1),
        seed=ex.getint("seed", 0),
        knn_k=ex.getint("knn_k", 5),
        weighting=ex.get("weighting", "binary"),
        signal_path=path("signal_path") if dataset == "csv" else None,
        coords_path=path("coords_path") if dataset == "csv" else None,
        header=_bool(ex.get("header", "false")),
        n_nodes=ex.getint("n_nodes", 100),
        n_instants=ex.getint("n_instants", 120),
        smoothness=ex.getfloat("smoothness", 2.0),
        offset=ex.getfloat("offset", 0.0),
        noise=ex.get("noise", "gaussian"),
        impulse_density=ex.getfloat("impulse_density", 0.05),
        impulse_share=ex.getfloat("impulse_share", 0.5),
        record_timing=_bool(ex.get("record_timing", "false")),
        workers=ex.getint("workers") if "workers" in ex else None,
    )


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"spec file not found: {path}")
    return parse_spec(path.read_text(), base_dir=path.parent)


def spec_to_text(spec: ExperimentSpec) -> str:
    """Render a spec back to the INI format (round-trips through :func:`parse_spec`)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    ex = {
        "dataset": "csv" if spec.signal_path else "synthetic",
        "knn_k": str(spec.knn_k),
        "weighting": spec.weighting,
        "input_snrs": ", ".join(format_float(s) for s in spec.input_snrs),
        "trials": str(spec.trials),
        "seed": str(spec.seed),
        "noise": spec.noise,
        "record_timing": str(spec.record_timing).lower(),
    }
    if spec.signal_path:
        ex.update(signal_path=spec.signal_path, coords_path=spec.coords_path,
                  header=str(spec.header).lower())
    else:
        ex.update(n_nodes=str(spec.n_nodes), n_instants=str(spec.n_instants),
                  smoothness=format_float(spec.smoothness), offset=format_float(spec.offset))
    if spec.noise == "mixed":
        ex.update(impulse_density=format_float(spec.impulse_density),
                  impulse_share=format_float(spec.impulse_share))
    cp["experiment"] = ex
    for f in spec.filters:
        sec = {"kind": f.kind, "product": f.product, "K": str(f.K), "M": str(f.M),
               "alpha": format_float(f.alpha), "beta": format_float(f.beta),
               "gamma": format_float(f.gamma),
               "include_self": str(f.include_self).lower(),
               "recursive": str(f.recursive).lower()}
        if f.gamma_time is not None:
            sec["gamma_time"] = format_float(f.gamma_time)
        cp[f"filter {f.label}"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().rstrip() + "\n"


def sweep_summary(result: ExperimentResult) -> list[str]:
    """One line per (filter, input SNR) with 6 significant digits."""
    return [f"{label:<20s} in={snr:>8.6g} dB  out={mean:>10.6g} dB  std={std:.6g}"
            for label, snr, mean, std in result.aggregate()]

