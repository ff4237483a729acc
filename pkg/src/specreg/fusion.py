"""Laplacian-pyramid fusion of complex spectra from several channels."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

log = logging.getLogger(__name__)

_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
# reflective boundary that keeps constants (and zero-inserted constants) exact
_MODE = "mirror"


def _blur(x, scale=1.0):
    k = _KERNEL * scale
    out = x.real.copy()
    im = x.imag.copy() if np.iscomplexobj(x) else None
    for ax in range(x.ndim):
        out = ndimage.convolve1d(out, k, axis=ax, mode=_MODE)
        if im is not None:
            im = ndimage.convolve1d(im, k, axis=ax, mode=_MODE)
    return out if im is None else out + 1j * im


def _down(x):
    return _blur(x)[tuple(slice(None, None, 2) for _ in range(x.ndim))]


def _up(x, shape):
    z = np.zeros(shape, dtype=x.dtype)
    z[tuple(slice(None, None, 2) for _ in range(x.ndim))] = x
    return _blur(z, scale=2.0)


@dataclass(frozen=True, eq=False)
class SpectrumPyramid:
    """Laplacian levels (finest first); the last entry is the low-pass top."""

    levels: tuple
    domain: str = "spatial-3d"

    @property
    def n_levels(self):
        return len(self.levels)

    @property
    def base_shape(self):
        return self.levels[0].shape


def max_levels(shape):
    """Largest pyramid depth allowed for an array shape."""
    P = 1
    while all(s >= 2**P for s in shape):
        P += 1
    return P


def build_pyramid(spectrum, levels=5, domain=None):
    """Laplacian pyramid of a 2D or 3D complex array.

    Raises ``ValueError`` when an axis is shorter than ``2**(levels-1)``.
    """
    x = np.asarray(spectrum, dtype=np.complex128)
    if levels < 2:
        raise ValueError("need at least two pyramid levels")
    if any(s < 2 ** (levels - 1) for s in x.shape):
        raise ValueError(f"axis too short for {levels} levels: shape {x.shape}")
    gauss = [x]
    for _ in range(levels - 1):
        gauss.append(_down(gauss[-1]))
    lap = [g - _up(gn, g.shape) for g, gn in zip(gauss[:-1], gauss[1:])]
    lap.append(gauss[-1])
    if domain is None:
        domain = "spherical-2d" if x.ndim == 2 else "spatial-3d"
    return SpectrumPyramid(tuple(lap), domain)


def reconstruct(pyramid):
    """Collapse a pyramid back to a single array of the base shape."""
    out = pyramid.levels[-1]
    for lap in reversed(pyramid.levels[:-1]):
        out = lap + _up(out, lap.shape)
    return out


def local_energy(x):
    """Sum of ``|x|^2`` over the centered 3-per-axis window."""
    e = np.abs(x) ** 2
    return ndimage.uniform_filter(e, size=3, mode=_MODE) * 3**e.ndim


def fuse(pyramids):
    """Merge per-channel pyramids into one.

    Top level: channel mean. Other levels: at each coefficient, take the
    channel with the largest local energy (ties go to the lowest index).
    """
    pyramids = list(pyramids)
    if not pyramids:
        raise ValueError("need at least one pyramid")
    ref = pyramids[0]
    for p in pyramids[1:]:
        if p.n_levels != ref.n_levels or any(
            a.shape != b.shape for a, b in zip(p.levels, ref.levels)
        ):
            raise ValueError("pyramids differ in shape or depth")
    if len(pyramids) == 1:
        return ref
    fused = []
    for k in range(ref.n_levels - 1):
        stack = np.stack([p.levels[k] for p in pyramids])
        energy = np.stack([local_energy(s) for s in stack])
        pick = np.argmax(energy, axis=0)
        fused.append(np.take_along_axis(stack, pick[None], axis=0)[0])
    fused.append(np.mean([p.levels[-1] for p in pyramids], axis=0))
    return SpectrumPyramid(tuple(fused), ref.domain)


def fuse_arrays(arrays, levels=5, mask=None):
    """Fuse same-shaped complex arrays; returns one array of that shape.

    ``levels`` is reduced (with a warning) when the arrays are too small.
    Entries where ``mask`` is False are forced to zero afterwards.
    """
    arrays = [np.asarray(a) for a in arrays]
    if len(arrays) == 1:
        out = arrays[0].astype(np.complex128)
    else:
        P = min(levels, max_levels(arrays[0].shape))
        if P < levels:
            log.warning("pyramid depth reduced from %d to %d for shape %s", levels, P, arrays[0].shape)
        if P < 2:
            out = np.mean(arrays, axis=0)
        else:
            out = reconstruct(fuse([build_pyramid(a, P) for a in arrays]))
    if mask is not None:
        out = np.where(mask, out, 0.0)
    return out


def fuse_spherical(spectrum, levels=5):
    """Fuse the channels of a spherical spectrum in its ``B x (2B-1)`` layout."""
    from .sphere import SphericalSpectrum

    if spectrum.n_channels == 1:
        return spectrum
    rect = spectrum.to_rect()
    B = spectrum.bandwidth
    l = np.arange(B)[:, None]
    m = np.arange(2 * B - 1)[None, :] - (B - 1)
    out = fuse_arrays([rect[..., k] for k in range(rect.shape[2])], levels, mask=np.abs(m) <= l)
    return SphericalSpectrum.from_rect(out, ("fused",))


def fuse_spatial(spectrum, levels=5):
    """Fuse the channels of a 3D spectrum on its frequency-centered layout."""
    from .volume import SpatialSpectrum

    if spectrum.n_channels == 1:
        return spectrum
    c = spectrum.coefficients
    shifted = [np.fft.fftshift(c[..., k]) for k in range(c.shape[3])]
    out = np.fft.ifftshift(fuse_arrays(shifted, levels))
    return SpatialSpectrum(out, spectrum.voxel_size, ("fused",))
