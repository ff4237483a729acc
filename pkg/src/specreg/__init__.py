"""Correspondence-free global registration of point clouds in the spectral domain."""

from .cloud import (
    OCCUPANCY,
    RANGE,
    DegradationSpec,
    PointCloud,
    RigidTransform,
    add_channel_noise,
    apply_transform,
    compute_psnr,
    slice_overlap,
    sparsify,
)
from .io import CloudFormatError, load_cloud, save_cloud
from .pipeline import RegistrationConfig, RegistrationFailure, RegistrationResult, evaluate, register
from .stats import BinghamDistribution, GaussianEstimate, fit_bingham, fit_gaussian

__version__ = "0.1.0"

__all__ = [
    "OCCUPANCY",
    "RANGE",
    "BinghamDistribution",
    "CloudFormatError",
    "DegradationSpec",
    "GaussianEstimate",
    "PointCloud",
    "RegistrationConfig",
    "RegistrationFailure",
    "RegistrationResult",
    "RigidTransform",
    "add_channel_noise",
    "apply_transform",
    "compute_psnr",
    "evaluate",
    "fit_bingham",
    "fit_gaussian",
    "load_cloud",
    "register",
    "save_cloud",
    "slice_overlap",
    "sparsify",
]
