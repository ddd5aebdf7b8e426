"""Stochastic routing on path-centric uncertain road networks."""

from .dist import (
    CostDistribution,
    DistributionError,
    JointDistribution,
    assemble,
    convolve,
    dominates,
    kl_divergence,
    marginalize,
    prob_within,
    total_cost,
)
from .graph import (
    Edge,
    GraphError,
    PaceGraph,
    RoadGraph,
    TPath,
    Trajectory,
    coarsest_path_sequence,
    extract_tpaths,
    path_distribution,
)
from .heuristics import build_table, lookup_U, make_heuristic, reverse, shortest_path_tree
from .oracle import exact_best, enumerate_paths
from .router import Engine, Query, RouteResult, route, route_naive, route_tpaths
from .vpaths import UpdatedPaceGraph, build_vpaths, convolution_path_distribution

__version__ = "0.1.0"

__all__ = [
    "CostDistribution",
    "DistributionError",
    "JointDistribution",
    "assemble",
    "convolve",
    "dominates",
    "kl_divergence",
    "marginalize",
    "prob_within",
    "total_cost",
    "Edge",
    "GraphError",
    "PaceGraph",
    "RoadGraph",
    "TPath",
    "Trajectory",
    "coarsest_path_sequence",
    "extract_tpaths",
    "path_distribution",
    "build_table",
    "lookup_U",
    "make_heuristic",
    "reverse",
    "shortest_path_tree",
    "exact_best",
    "enumerate_paths",
    "Engine",
    "Query",
    "RouteResult",
    "route",
    "route_naive",
    "route_tpaths",
    "UpdatedPaceGraph",
    "build_vpaths",
    "convolution_path_distribution",
]
