"""Tactile slip detection, force estimation and grasp simulation."""

from ._forte import (
    DataError,
    ForceModel,
    PipelineConfig,
    compute_psd,
    grasp,
    hann_window,
    metrics,
    normalize_raw,
    objects,
    psd_feature,
    read_trace,
    replay,
    simulate,
    train_force,
)

__all__ = [
    "DataError",
    "ForceModel",
    "PipelineConfig",
    "compute_psd",
    "grasp",
    "hann_window",
    "metrics",
    "normalize_raw",
    "objects",
    "psd_feature",
    "read_trace",
    "replay",
    "simulate",
    "train_force",
]
