"""Nearest-neighbor search structures, nonparametric prediction rules, and
latent-source experiment harnesses."""

from .core import (
    KernelSpec,
    LabeledDataset,
    NeighborHit,
    TimeSeries,
    cosine_dist_ratings,
    euclidean,
    hamming,
    kernel_eval,
    shift_min_distance,
)

__version__ = "0.1.0"

__all__ = [
    "KernelSpec",
    "LabeledDataset",
    "NeighborHit",
    "TimeSeries",
    "cosine_dist_ratings",
    "euclidean",
    "hamming",
    "kernel_eval",
    "shift_min_distance",
    "__version__",
]
