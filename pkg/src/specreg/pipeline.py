"""End-to-end registration: rotation on the sphere, then translation in 3D."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fusion, quaternion as quat, so3, sphere, stats, volume
from .cloud import RANGE, RigidTransform, apply_transform


class RegistrationFailure(ArithmeticError):
    """A numerical stage failed (empty correlation, quadrature, solver)."""


@dataclass(frozen=True)
class RegistrationConfig:
    """Registration parameters.

    bandwidth:
        Spherical bandwidth; the sphere is sampled on a ``2B x 2B`` grid.
    n_voxels:
        Voxels per axis of the translation grid (even).
    fov:
        Edge length of the voxel cube in meters; ``None`` picks twice the
        largest target point norm, rounded up to a whole meter.
    channels:
        Channel names correlated (and fused when more than one).
    normalize_channels:
        Scale every channel by its largest magnitude within each cloud before
        sampling, so that fusion compares channels on equal footing.
    """

    bandwidth: int = 120
    n_voxels: int = 200
    fov: float | None = None
    channels: tuple = (RANGE,)
    pad_rot: int = 2
    pad_trans: int = 2
    pyramid_levels: int = 5
    n_neighbors: int = 4
    seed: int = 0
    normalize_channels: bool = True
    sphere_reduce: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        for name in ("bandwidth", "n_voxels", "pad_rot", "pad_trans", "pyramid_levels", "n_neighbors"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.bandwidth < 2:
            raise ValueError("bandwidth must be at least 2")
        if self.n_voxels < 8 or self.n_voxels % 2:
            raise ValueError("n_voxels must be an even number >= 8")
        if self.fov is not None and self.fov <= 0:
            raise ValueError("fov must be positive")
        if not self.channels:
            raise ValueError("at least one channel is required")

    def to_dict(self):
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    """Estimated transform (``target ~ R(q) source + t``) with uncertainty."""

    rotation: np.ndarray
    bingham: stats.BinghamDistribution
    translation: np.ndarray
    gaussian: stats.GaussianEstimate
    peak_rot: float
    peak_trans: float
    timings_ms: dict = field(default_factory=dict)
    config: RegistrationConfig = None
    fov: float = 0.0
    rotation_cell: float = 0.0

    @property
    def transform(self):
        return RigidTransform(self.rotation, self.translation)

    @property
    def voxel_size(self):
        return self.fov / self.config.n_voxels

    def criteria(self):
        rot = stats.uncertainty_criteria(self.bingham.second_moment())
        trans = stats.uncertainty_criteria(self.gaussian.covariance)
        return {"rot": dict(zip("ade", rot)), "trans": dict(zip("ade", trans))}

    def to_dict(self, timings=True):
        out = {
            "config": self.config.to_dict() if self.config else None,
            "estimate": {"q": self.rotation.tolist(), "t": self.translation.tolist()},
            "bingham": {"M": self.bingham.M.tolist(), "Z": self.bingham.Z.tolist()},
            "gaussian": {
                "mu": self.gaussian.mean.tolist(),
                "sigma": self.gaussian.covariance.tolist(),
            },
            "peaks": {"rot": self.peak_rot, "trans": self.peak_trans},
            "criteria": self.criteria(),
            "fov": self.fov,
        }
        if timings:
            out["timings_ms"] = dict(self.timings_ms)
        return out


def _validate(cloud, cfg, role):
    if len(cloud) == 0:
        raise ValueError(f"{role} cloud is empty")
    missing = [c for c in cfg.channels if not cloud.has_channel(c)]
    if missing:
        raise KeyError(f"{role} cloud lacks channel(s): {', '.join(missing)}")


def _scaled_channels(cloud, cfg):
    vals = np.column_stack([cloud.channel(c) for c in cfg.channels])
    if cfg.normalize_channels:
        peak = np.abs(vals).max(axis=0)
        vals = vals / np.where(peak > 0, peak, 1.0)
    return vals


def spherical_spectrum(cloud, cfg):
    """Project, sample and transform every selected channel; then fuse."""
    grid = sphere.make_grid(cfg.bandwidth)
    phi, theta, _ = sphere.project_to_sphere(cloud, ())
    f = sphere.sample_onto_grid(phi, theta, _scaled_channels(cloud, cfg), grid, cfg.sphere_reduce)
    spec = sphere.sft(sphere.SphericalFunction(grid, f.values, cfg.channels))
    return fusion.fuse_spherical(spec, cfg.pyramid_levels)


def spatial_spectrum(cloud, cfg, fov):
    """Voxelize and transform every selected channel; then fuse."""
    scaled = cloud.replace(channels={c: v for c, v in zip(cfg.channels, _scaled_channels(cloud, cfg).T)})
    vol = volume.voxelize(scaled, cfg.n_voxels, fov, cfg.channels)
    return fusion.fuse_spatial(volume.fft3(vol), cfg.pyramid_levels)


def estimate_rotation(source, target, cfg):
    F = spherical_spectrum(target, cfg)
    H = spherical_spectrum(source, cfg)
    grid = so3.so3_correlate(F, H, cfg.pad_rot)
    samples = so3.extract_rotation_samples(grid, cfg.n_neighbors)
    bingham = stats.fit_bingham(samples)
    return bingham, float(samples.magnitudes[0]), grid.cell_size


def estimate_translation(source, target, cfg, fov):
    F = spatial_spectrum(target, cfg, fov)
    H = spatial_spectrum(source, cfg, fov)
    corr = volume.phase_correlate(F, H, cfg.pad_trans)
    T, w = volume.extract_translation_samples(corr, cfg.n_neighbors)
    return stats.fit_gaussian(T, w), float(corr.magnitudes.max())


def register(source, target, cfg=None):
    """Estimate ``(q, t)`` with ``target ~ R(q) source + t``."""
    cfg = cfg or RegistrationConfig()
    if cfg.sphere_reduce not in ("mean", "max"):
        raise ValueError(f"unknown sphere reduction {cfg.sphere_reduce!r}")
    _validate(source, cfg, "source")
    _validate(target, cfg, "target")
    fov = cfg.fov if cfg.fov is not None else volume.auto_fov(target)

    try:
        t0 = time.perf_counter()
        bingham, peak_rot, cell = estimate_rotation(source, target, cfg)
        q = stats.bingham_mode(bingham)
        t1 = time.perf_counter()
        oriented = apply_transform(source, RigidTransform(q))
        gaussian, peak_trans = estimate_translation(oriented, target, cfg, fov)
        t2 = time.perf_counter()
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        raise RegistrationFailure(str(exc)) from exc
    return RegistrationResult(
        rotation=q,
        bingham=bingham,
        translation=gaussian.mean,
        gaussian=gaussian,
        peak_rot=peak_rot,
        peak_trans=peak_trans,
        timings_ms={
            "rot": (t1 - t0) * 1e3,
            "trans": (t2 - t1) * 1e3,
            "total": (t2 - t0) * 1e3,
        },
        config=cfg,
        fov=fov,
        rotation_cell=cell,
    )


def evaluate(result, truth):
    """Geodesic rotation error (degrees) and translation error (meters)."""
    q_est = result.rotation if hasattr(result, "rotation") else result[0]
    t_est = result.translation if hasattr(result, "translation") else result[1]
    rot = np.degrees(quat.geodesic_distance(q_est, truth.rotation))
    trans = float(np.linalg.norm(np.asarray(t_est) - truth.translation))
    return float(rot), trans
