"""Voxelization, 3D DFT and phase correlation for the translation search.

The voxel grid is a cube of edge ``fov`` centered at the origin, split into
``n`` voxels per axis of width ``fov / n``. Voxel ``(i, j, k)`` covers
``[-fov/2 + i*delta, -fov/2 + (i+1)*delta)`` along each axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import RANGE
from .so3 import peak_with_neighbors


@dataclass(frozen=True, eq=False)
class VolumetricFunction:
    """Per-voxel channel means, shape ``(n, n, n, K)``."""

    values: np.ndarray
    fov: float
    channels: tuple = ()
    out_of_cube: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 3:
            v = v[..., None]
        n = v.shape[0]
        if v.shape[:3] != (n, n, n) or n % 2:
            raise ValueError("volume must be an even-sized cube")
        if not np.all(np.isfinite(v)):
            raise ValueError("volume values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def voxel_size(self):
        return self.fov / self.n


@dataclass(frozen=True, eq=False)
class SpatialSpectrum:
    """3D DFT coefficients per channel, shape ``(n, n, n, K)``."""

    coefficients: np.ndarray
    voxel_size: float
    channels: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if c.ndim == 3:
            c = c[..., None]
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self):
        return self.coefficients.shape[0]

    @property
    def n_channels(self):
        return self.coefficients.shape[3]


@dataclass(frozen=True, eq=False)
class CorrelationVolume:
    """``|c|`` on the padded grid with a wrap-aware index-to-shift map."""

    magnitudes: np.ndarray
    voxel_size: float
    pad_factor: int

    @property
    def n_padded(self):
        return self.magnitudes.shape[0]

    @property
    def step(self):
        """Displacement per padded index, ``voxel_size / pad_factor`` (meters)."""
        return self.voxel_size / self.pad_factor

    def shift_index(self, index):
        """Signed shift in padded voxels; indices above ``N/2`` are negative."""
        i = np.asarray(index)
        N = self.n_padded
        return np.where(i > N // 2, i - N, i)

    def displacement(self, index):
        return self.shift_index(index) * self.step


def auto_fov(cloud):
    """Twice the largest point norm, rounded up to a whole meter."""
    return float(math.ceil(2.0 * np.max(np.linalg.norm(cloud.points, axis=1))))


def voxelize(cloud, n, fov, channels=(RANGE,)):
    """Average the selected channels of the points inside each voxel."""
    if n < 8 or n % 2:
        raise ValueError("n must be an even number >= 8")
    if fov <= 0:
        raise ValueError("fov must be positive")
    delta = fov / n
    idx = np.floor((cloud.points + fov / 2.0) / delta).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < n), axis=1)
    n_out = int((~inside).sum())
    if len(cloud) and not inside.any():
        raise ValueError("all points lie outside the voxel cube")
    flat = np.ravel_multi_index(idx[inside].T, (n, n, n))
    counts = np.bincount(flat, minlength=n**3)
    occupied = counts > 0
    out = np.zeros((n**3, len(channels)))
    for k, name in enumerate(channels):
        sums = np.bincount(flat, weights=cloud.channel(name)[inside], minlength=n**3)
        out[occupied, k] = sums[occupied] / counts[occupied]
    return VolumetricFunction(out.reshape(n, n, n, len(channels)), fov, tuple(channels), n_out)


def fft3(volume):
    """Per-channel 3D DFT with ``1/n^3`` forward normalization."""
    v = volume.values
    n = v.shape[0]
    c = np.fft.fftn(v, axes=(0, 1, 2)) / n**3
    return SpatialSpectrum(c, volume.voxel_size, volume.channels)


def ifft3(spectrum):
    """Exact inverse of :func:`fft3`; returns real values ``(n, n, n, K)``."""
    n = spectrum.n
    return np.fft.ifftn(spectrum.coefficients, axes=(0, 1, 2)).real * n**3


def _single(spectrum):
    c = spectrum.coefficients
    if c.shape[3] != 1:
        raise ValueError("phase correlation needs single-channel spectra; fuse channels first")
    return c[..., 0]


def zero_pad_spectrum(C, N):
    """Embed an unshifted ``n^3`` spectrum centered into an ``N^3`` one."""
    n = C.shape[0]
    if N == n:
        return C
    p = (N - n) // 2
    centered = np.fft.fftshift(C)
    out = np.zeros((N, N, N), dtype=np.complex128)
    out[p : p + n, p : p + n, p : p + n] = centered
    return np.fft.ifftshift(out)


def phase_correlate(F, H, pad_factor=2):
    """Cross-correlation magnitude of target ``F`` and source ``H``.

    ``C = F conj(H)`` is zero-padded to ``N = n * pad_factor`` per axis and
    summed back with ``exp(+j 2 pi x.u / N)``; the peak sits at the shift
    that moves the source onto the target.
    """
    if F.n != H.n:
        raise ValueError(f"size mismatch: {F.n} vs {H.n}")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    C = _single(F) * np.conj(_single(H))
    N = F.n * pad_factor
    c = np.fft.ifftn(zero_pad_spectrum(C, N)) * N**3
    return CorrelationVolume(np.abs(c), F.voxel_size, pad_factor)


def extract_translation_samples(corr, n_neighbors=4):
    """Peak shift and its strongest neighbors, in meters, with normalized weights."""
    cells = peak_with_neighbors(corr.magnitudes, n_neighbors, wrap=(True, True, True))
    idx = np.array(cells)
    T = corr.displacement(idx).astype(np.float64)
    w = corr.magnitudes[tuple(idx.T)]
    return T, w / w.sum()
