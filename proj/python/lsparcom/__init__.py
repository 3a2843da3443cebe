"""Sparse-recovery (ISTA/FISTA on temporal statistics) and a learned unfolded
network for super-resolving blinking-emitter movies."""

from ._core import (
    FormatError,
    GridSpec,
    LsparcomWeights,
    MeasurementOperator,
    Psf,
    evaluate_localization,
    init_weights,
    network_forward,
    positive_soft_threshold,
    preprocess,
    read_weights,
    reconstruct_lsparcom,
    reconstruct_sparcom,
    resize_to_high_res,
    simulate_points,
    smooth_activation,
    temporal_variance,
    train,
    write_weights,
)

__all__ = [
    "FormatError",
    "GridSpec",
    "LsparcomWeights",
    "MeasurementOperator",
    "Psf",
    "evaluate_localization",
    "init_weights",
    "network_forward",
    "positive_soft_threshold",
    "preprocess",
    "read_weights",
    "reconstruct_lsparcom",
    "reconstruct_sparcom",
    "resize_to_high_res",
    "simulate_points",
    "smooth_activation",
    "temporal_variance",
    "train",
    "write_weights",
]
