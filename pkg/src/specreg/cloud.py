"""Point-cloud data model, rigid transforms and synthetic degradations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import quaternion as quat

RANGE = "range"
OCCUPANCY = "occupancy"
AXES = {"x": 0, "y": 1, "z": 2}


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N points with K named per-point channels.

    The ``range`` channel is derived from the point norms unless it is stored
    explicitly (e.g. after channel-selective noise). ``occupancy`` is a
    built-in pseudo-channel that is 1 for every point.
    """

    points: np.ndarray
    channels: Mapping[str, np.ndarray] = field(default_factory=dict)
    frame_id: str = ""
    dropped_count: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if np.any(np.all(pts == 0.0, axis=1)):
            raise ValueError("zero-norm points are not allowed")
        chans = {}
        for name, values in self.channels.items():
            v = np.asarray(values, dtype=np.float64).reshape(-1)
            if v.shape[0] != pts.shape[0]:
                raise ValueError(
                    f"channel {name!r} has {v.shape[0]} values for {pts.shape[0]} points"
                )
            if not np.all(np.isfinite(v)):
                raise ValueError(f"channel {name!r} contains non-finite values")
            chans[name] = _frozen(v)
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "channels", chans)

    def __len__(self):
        return self.points.shape[0]

    @property
    def channel_names(self):
        return list(self.channels)

    def has_channel(self, name):
        return name in self.channels or name in (RANGE, OCCUPANCY)

    def channel(self, name):
        if name in self.channels:
            return self.channels[name]
        if name == RANGE:
            return np.linalg.norm(self.points, axis=1)
        if name == OCCUPANCY:
            return np.ones(len(self))
        raise KeyError(f"cloud has no channel {name!r}")

    def select(self, index):
        """Sub-cloud of the given point indices (or boolean mask)."""
        return PointCloud(
            self.points[index],
            {k: v[index] for k, v in self.channels.items()},
            self.frame_id,
        )

    def replace(self, points=None, channels=None, frame_id=None):
        return PointCloud(
            self.points if points is None else points,
            self.channels if channels is None else channels,
            self.frame_id if frame_id is None else frame_id,
        )

    def with_range_channel(self):
        """Copy with the derived range stored as an explicit channel."""
        chans = dict(self.channels)
        chans[RANGE] = self.channel(RANGE)
        return self.replace(channels=chans)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation (unit quaternion, w-first) followed by a translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        n = np.linalg.norm(q)
        if n == 0 or not np.isfinite(n):
            raise ValueError("rotation must be a nonzero finite quaternion")
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", _frozen(q / n))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls):
        return cls()

    @property
    def matrix(self):
        return quat.to_matrix(self.rotation)

    def homogeneous(self):
        T = np.eye(4)
        T[:3, :3] = self.matrix
        T[:3, 3] = self.translation
        return T

    def apply(self, points):
        return np.asarray(points, dtype=np.float64) @ self.matrix.T + self.translation

    def inverse(self):
        qi = quat.conjugate(self.rotation)
        return RigidTransform(qi, -quat.to_matrix(qi) @ self.translation)

    def __matmul__(self, other):
        """Composition: ``(a @ b).apply(p) == a.apply(b.apply(p))``."""
        return RigidTransform(
            quat.multiply(self.rotation, other.rotation),
            self.matrix @ other.translation + self.translation,
        )


def apply_transform(cloud, t):
    """Apply ``p' = R(q) p + t`` to every point; channels are copied unchanged.

    A stored ``range`` channel is kept as-is: it is sensor data, not geometry.
    """
    if np.array_equal(t.rotation, [1.0, 0.0, 0.0, 0.0]) and not np.any(t.translation):
        return cloud.replace()
    return cloud.replace(points=t.apply(cloud.points))


def noise_sigma(peak, psnr_db):
    """Noise standard deviation giving ``psnr_db`` for a signal peak."""
    return peak / 10.0 ** (psnr_db / 20.0)


def add_channel_noise(cloud, psnr_db, seed, channel_psnr=None, point_psnr=None):
    """Additive zero-mean Gaussian noise on coordinates and channels.

    Positional noise is i.i.d. per Cartesian axis with
    ``sigma = max ||p|| / 10**(psnr/20)``; each stored channel gets
    ``sigma_ch = max |ch| / 10**(psnr/20)``. ``channel_psnr`` overrides the
    level of individual channels and ``point_psnr`` the positional level;
    ``math.inf`` disables a term. Overriding ``range`` materializes the
    derived range channel first so that it can be perturbed on its own.

    Randomness comes from numpy's PCG64 generator seeded with ``seed``.
    """
    channel_psnr = dict(channel_psnr or {})
    point_psnr = psnr_db if point_psnr is None else point_psnr
    levels = [psnr_db, point_psnr, *channel_psnr.values()]
    if all(math.isinf(p) for p in levels):
        return cloud.replace()
    if any(p <= 0 for p in levels):
        raise ValueError("psnr_db must be positive")
    if len(cloud) == 0:
        raise ValueError("cannot add noise to an empty cloud")
    if RANGE in channel_psnr and RANGE not in cloud.channels:
        cloud = cloud.with_range_channel()
    rng = np.random.Generator(np.random.PCG64(seed))

    pts = cloud.points
    if not math.isinf(point_psnr):
        sigma = noise_sigma(np.max(np.linalg.norm(pts, axis=1)), point_psnr)
        if not np.isfinite(sigma) or sigma == 0:
            raise ValueError("degenerate cloud: positional noise sigma is not usable")
        pts = pts + rng.normal(0.0, sigma, size=pts.shape)
    chans = {}
    for name, values in cloud.channels.items():
        p = channel_psnr.get(name, psnr_db)
        if math.isinf(p):
            chans[name] = values
            continue
        sigma = noise_sigma(np.max(np.abs(values)), p)
        if not np.isfinite(sigma):
            raise ValueError(f"channel {name!r}: noise sigma is not finite")
        chans[name] = values + rng.normal(0.0, sigma, size=values.shape)
    # noise can, in principle, land a point exactly on the origin
    keep = np.any(pts != 0.0, axis=1)
    return PointCloud(pts[keep], {k: v[keep] for k, v in chans.items()}, cloud.frame_id)


def sparsify(cloud, fraction, seed):
    """Remove ``floor(fraction * N)`` points uniformly without replacement."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    n = len(cloud)
    n_remove = int(math.floor(fraction * n))
    if n - n_remove <= 0:
        raise ValueError("sparsification leaves an empty cloud")
    if n_remove == 0:
        return cloud.replace()
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = np.sort(rng.permutation(n)[: n - n_remove])
    return cloud.select(keep)


def slice_overlap(cloud, keep_fraction, axis="x"):
    """Keep the ``ceil(keep_fraction * N)`` points with the smallest coordinate.

    Slabs are removed from the maximum side towards the minimum. Ties in the
    coordinate are broken by point index; surviving points keep their order.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in (0, 1]")
    if len(cloud) == 0:
        raise ValueError("cloud is empty")
    ax = AXES[axis.lower()] if isinstance(axis, str) else int(axis)
    n_keep = int(math.ceil(keep_fraction * len(cloud) - 1e-9))
    order = np.argsort(cloud.points[:, ax], kind="stable")
    return cloud.select(np.sort(order[:n_keep]))


def compute_psnr(reference, degraded):
    """PSNR in dB of a degraded copy: ``20 log10(peak / rmse)``.

    ``peak`` is the largest point norm of the reference, ``rmse`` the root
    mean square of the per-coordinate positional residuals. Identical clouds
    give ``math.inf``.
    """
    if len(reference) != len(degraded):
        raise ValueError("clouds must have the same number of points")
    resid = degraded.points - reference.points
    rmse = float(np.sqrt(np.mean(resid**2)))
    if rmse == 0.0:
        return math.inf
    peak = float(np.max(np.linalg.norm(reference.points, axis=1)))
    return 20.0 * math.log10(peak / rmse)


@dataclass(frozen=True)
class DegradationSpec:
    """One benchmark degradation; at most one of the three is active."""

    psnr_db: float | None = None
    sparsify_fraction: float | None = None
    overlap_fraction: float | None = None
    axis: str = "x"
    seed: int = 0

    def __post_init__(self):
        active = [
            v
            for v in (self.psnr_db, self.sparsify_fraction, self.overlap_fraction)
            if v is not None
        ]
        if len(active) > 1:
            raise ValueError("at most one degradation may be active")
        if self.axis.lower() not in AXES:
            raise ValueError(f"axis must be one of X/Y/Z, got {self.axis!r}")

    def apply(self, cloud):
        if self.psnr_db is not None:
            return add_channel_noise(cloud, self.psnr_db, self.seed)
        if self.sparsify_fraction is not None:
            return sparsify(cloud, self.sparsify_fraction, self.seed)
        if self.overlap_fraction is not None:
            return slice_overlap(cloud, self.overlap_fraction, self.axis)
        return cloud.replace()
