"""Attenuated k-hop and node-selecting graphs with mean/median filters for
denoising time-varying signals on sensor networks."""
from .filters import (FilterConfig, FilterStats, NeighborhoodSet, apply_filter,
                      mean_filter_batch, mean_filter_sequential, median_filter,
                      median_filter_graph, neighborhood, selection_graph)
from .graph import Graph, SelectionMatrix, build_knn_graph, degree_vector, logical_adjacency
from .harness import (ExperimentResult, ExperimentSpec, FilterEntry, add_mixed_noise,
                      add_white_noise, run_sweep, snr_db, synthesize_smooth_signal)
from .khop import KHopParams, khop_attenuated, khop_unweighted
from .product import (TemporalParams, line_graph_adjacency, node_selecting_graph,
                      strong_product, temporal_adjacency)

__version__ = "0.1.0"

__all__ = [
    "ExperimentResult", "ExperimentSpec", "FilterConfig", "FilterEntry", "FilterStats",
    "Graph", "KHopParams", "NeighborhoodSet", "SelectionMatrix", "TemporalParams",
    "add_mixed_noise", "add_white_noise", "apply_filter", "build_knn_graph",
    "degree_vector", "khop_attenuated", "khop_unweighted", "line_graph_adjacency",
    "logical_adjacency", "mean_filter_batch", "mean_filter_sequential", "median_filter",
    "median_filter_graph", "neighborhood", "node_selecting_graph", "run_sweep",
    "selection_graph", "snr_db", "strong_product", "synthesize_smooth_signal",
    "temporal_adjacency",
]
