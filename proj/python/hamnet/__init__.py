"""Hierarchical associative memory networks."""

from ._core import (
    Connection,
    ConfigError,
    DomainError,
    Error,
    Layer,
    Lagrangian,
    Network,
    Shape,
    ShapeError,
    activations,
    assembly_demo,
    capacity_sweep,
    corrupt,
    feature_map_extent,
    hessian_quadratic_form,
    lagrangian_value,
    load_network_config,
    random_binary_patterns,
    retrieve,
    store_patterns,
    train,
)

__all__ = [
    "Connection",
    "ConfigError",
    "DomainError",
    "Error",
    "Layer",
    "Lagrangian",
    "Network",
    "Shape",
    "ShapeError",
    "activations",
    "assembly_demo",
    "capacity_sweep",
    "corrupt",
    "feature_map_extent",
    "hessian_quadratic_form",
    "lagrangian_value",
    "load_network_config",
    "random_binary_patterns",
    "retrieve",
    "store_patterns",
    "train",
]
