"""Metric-guided subgraph sampling and GCN training."""

from ._core import (
    Graph,
    MeguideError,
    Subgraph,
    connection_failure_distance,
    convert_planetoid,
    default_config,
    feature_smoothness,
    load_dataset,
    meguide_sample,
    metrics,
    pair_smoothness,
    path3_graph,
    planted_graph,
    train,
    two_cluster_graph,
)

__all__ = [
    "Graph",
    "MeguideError",
    "Subgraph",
    "connection_failure_distance",
    "convert_planetoid",
    "default_config",
    "feature_smoothness",
    "load_dataset",
    "meguide_sample",
    "metrics",
    "pair_smoothness",
    "path3_graph",
    "planted_graph",
    "train",
    "two_cluster_graph",
]
