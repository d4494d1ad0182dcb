"""Cluster-popping samplers, network reliability estimation and
fixed-size connected subgraph counting."""
from .coupling import phi, psi, sample_connected, sample_connected_batch
from .fixed_size import check_log_concavity, estimate_fixed_size, sample_at_weight
from .graph import (
    Arc,
    DirectedMultigraph,
    Edge,
    UndirectedGraph,
    bidirect,
    contract_pair,
    count_arborescences,
    count_spanning_trees,
    parse_graph,
    scc_condensation,
    subgraph_log_weight,
)
from .oracle import enumerate_reach, enumerate_rel, tv_distance
from .popping import (
    cluster_popping_sample,
    find_minimal_clusters,
    repair_invert,
    repair_map,
    sample_reach,
)
from .reliability import (
    build_contraction_sequence,
    estimate_ratio,
    estimate_reach,
    estimate_reliability,
    highp_estimate,
    highp_sample,
)

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "bidirect",
    "build_contraction_sequence",
    "check_log_concavity",
    "cluster_popping_sample",
    "contract_pair",
    "count_arborescences",
    "count_spanning_trees",
    "DirectedMultigraph",
    "Edge",
    "enumerate_reach",
    "enumerate_rel",
    "estimate_fixed_size",
    "estimate_ratio",
    "estimate_reach",
    "estimate_reliability",
    "find_minimal_clusters",
    "highp_estimate",
    "highp_sample",
    "parse_graph",
    "phi",
    "psi",
    "repair_invert",
    "repair_map",
    "sample_at_weight",
    "sample_connected",
    "sample_connected_batch",
    "sample_reach",
    "scc_condensation",
    "subgraph_log_weight",
    "tv_distance",
    "UndirectedGraph",
]
