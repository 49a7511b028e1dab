"""Bayesian hyperbolic multidimensional scaling."""

from ._core import (
    BhmdsError,
    balanced_tree,
    cli,
    distortion,
    embed,
    estimate_curvature,
    exp_origin,
    initialize,
    log_origin,
    pairwise_distances,
    poincare,
    shortest_paths,
    simulate,
    stress,
)

__all__ = [
    "BhmdsError",
    "balanced_tree",
    "cli",
    "distortion",
    "embed",
    "estimate_curvature",
    "exp_origin",
    "initialize",
    "log_origin",
    "pairwise_distances",
    "poincare",
    "shortest_paths",
    "simulate",
    "stress",
]
