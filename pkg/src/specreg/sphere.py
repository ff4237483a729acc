"""Spherical projection, Driscoll-Healy sampling and spherical Fourier transforms.

Conventions
-----------
Grid nodes are ``theta_j = pi (2j + 1) / (4B)`` and ``phi_k = 2 pi k / (2B)``
for ``j, k < 2B``. Spherical harmonics are the orthonormal, complex ones with
the Condon-Shortley phase::

    Y_l^m(theta, phi) = (-1)^m N_lm P_l^m(cos theta) exp(i m phi),   m >= 0
    Y_l^-m            = (-1)^m conj(Y_l^m)

where ``P_l^m`` carries no Condon-Shortley factor. Coefficients are the plain
L2 inner products ``F_l^m = <f, Y_l^m>``, so Parseval holds with unit weight.

Coefficients are stored degree-major with ``m`` running from ``-l`` to ``l``:
``(l, m)`` lives at flat index ``l*l + l + m``. A spectrum of bandwidth ``B``
therefore has ``B*B`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cloud import RANGE


def coeff_index(l, m):
    """Flat storage index of degree ``l``, order ``m``."""
    return l * l + l + m


def degree_order(bandwidth):
    """Arrays ``(l, m)`` for every storage slot of a bandwidth-``B`` spectrum."""
    l = np.repeat(np.arange(bandwidth), 2 * np.arange(bandwidth) + 1)
    m = np.arange(bandwidth * bandwidth) - l * l - l
    return l, m


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Equiangular Driscoll-Healy grid with its quadrature weights."""

    bandwidth: int
    thetas: np.ndarray = field(init=False)
    phis: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        B = int(self.bandwidth)
        if B < 2:
            raise ValueError("bandwidth must be at least 2")
        j = np.arange(2 * B)
        thetas = np.pi * (2 * j + 1) / (4 * B)
        phis = 2 * np.pi * j / (2 * B)
        k = np.arange(B)[:, None]
        weights = (2.0 / B) * np.sin(thetas) * np.sum(
            np.sin((2 * k + 1) * thetas) / (2 * k + 1), axis=0
        )
        object.__setattr__(self, "bandwidth", B)
        for name, value in (("thetas", thetas), ("phis", phis), ("weights", weights)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def shape(self):
        return (2 * self.bandwidth, 2 * self.bandwidth)

    def integrate(self, values):
        """Quadrature of grid samples over the sphere (leading two axes)."""
        values = np.asarray(values)
        dphi = 2 * np.pi / (2 * self.bandwidth)
        return dphi * np.tensordot(self.weights, values.sum(axis=1), axes=(0, 0))


def make_grid(bandwidth):
    return SphericalGrid(bandwidth)


@dataclass(frozen=True, eq=False)
class SphericalFunction:
    """Real samples on a grid, shape ``(2B, 2B, K)``."""

    grid: SphericalGrid
    values: np.ndarray
    channels: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 2:
            v = v[..., None]
        if v.shape[:2] != self.grid.shape:
            raise ValueError(f"values shape {v.shape[:2]} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("spherical function values must be finite")
        object.__setattr__(self, "values", v)
        if not self.channels:
            object.__setattr__(self, "channels", tuple(f"ch{i}" for i in range(v.shape[2])))


@dataclass(frozen=True, eq=False)
class SphericalSpectrum:
    """Spherical-harmonic coefficients, shape ``(B*B, K)`` in storage order."""

    bandwidth: int
    coefficients: np.ndarray
    channels: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.bandwidth**2:
            raise ValueError(
                f"expected {self.bandwidth**2} coefficients for bandwidth {self.bandwidth}, "
                f"got {c.shape[0]}"
            )
        object.__setattr__(self, "coefficients", c)
        if not self.channels:
            object.__setattr__(self, "channels", tuple(f"ch{i}" for i in range(c.shape[1])))

    @property
    def n_channels(self):
        return self.coefficients.shape[1]

    def get(self, l, m, channel=0):
        return self.coefficients[coeff_index(l, m), channel]

    def degree_energy(self):
        """Per-degree energy ``sum_m |F_l^m|^2``, shape ``(B, K)``."""
        l, _ = degree_order(self.bandwidth)
        out = np.zeros((self.bandwidth, self.n_channels))
        np.add.at(out, l, np.abs(self.coefficients) ** 2)
        return out

    def to_rect(self):
        """``(B, 2B-1, K)`` layout: row ``l``, column ``m + B - 1``; zero outside."""
        B = self.bandwidth
        l, m = degree_order(B)
        out = np.zeros((B, 2 * B - 1, self.n_channels), dtype=np.complex128)
        out[l, m + B - 1] = self.coefficients
        return out

    @classmethod
    def from_rect(cls, rect, channels=()):
        rect = np.asarray(rect)
        if rect.ndim == 2:
            rect = rect[..., None]
        B = rect.shape[0]
        if rect.shape[1] != 2 * B - 1:
            raise ValueError("rectangular layout must be B x (2B-1)")
        l, m = degree_order(B)
        return cls(B, rect[l, m + B - 1], channels)


def project_to_sphere(cloud, channels=(RANGE,)):
    """Azimuth, polar angle and channel values of every point.

    Returns ``(phi, theta, values)`` with ``phi`` in ``[0, 2pi)``, ``theta`` in
    ``[0, pi]`` and ``values`` of shape ``(N, K)``. Points on the z axis get
    ``phi = 0``.
    """
    p = cloud.points
    r = np.linalg.norm(p, axis=1)
    if np.any(r == 0):
        raise ValueError("zero-norm point has no direction")
    theta = np.arccos(np.clip(p[:, 2] / r, -1.0, 1.0))
    on_axis = (p[:, 0] == 0) & (p[:, 1] == 0)
    phi = np.where(on_axis, 0.0, np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi))
    # mod can round 2pi - tiny up to exactly 2pi
    phi[phi >= 2 * np.pi] = 0.0
    values = np.column_stack([cloud.channel(c) for c in channels]) if channels else np.zeros((len(p), 0))
    return phi, theta, values


def sample_onto_grid(phi, theta, values, grid, reduce="mean"):
    """Bin samples to their nearest grid node and average per node.

    Nearest node is found separably: nearest polar row, then nearest azimuth
    column (with wrap). Empty nodes are zero. ``reduce="max"`` keeps the
    largest value per node instead of the mean.
    """
    B2 = 2 * grid.bandwidth
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    K = values.shape[1]
    out = np.zeros((B2, B2, K))
    if len(phi) == 0:
        return SphericalFunction(grid, out)
    j = np.clip(np.rint(np.asarray(theta) * B2 / np.pi - 0.5), 0, B2 - 1).astype(np.int64)
    k = np.mod(np.rint(np.asarray(phi) * B2 / (2 * np.pi)), B2).astype(np.int64)
    flat = j * B2 + k
    if reduce == "mean":
        counts = np.bincount(flat, minlength=B2 * B2)
        occupied = counts > 0
        for c in range(K):
            sums = np.bincount(flat, weights=values[:, c], minlength=B2 * B2)
            node = np.zeros(B2 * B2)
            node[occupied] = sums[occupied] / counts[occupied]
            out[..., c] = node.reshape(B2, B2)
    elif reduce == "max":
        for c in range(K):
            node = np.full(B2 * B2, -np.inf)
            np.maximum.at(node, flat, values[:, c])
            node[~np.isfinite(node)] = 0.0
            out[..., c] = node.reshape(B2, B2)
    else:
        raise ValueError(f"unknown reduction {reduce!r}")
    return SphericalFunction(grid, out)


def associated_legendre(l, m, x):
    """Associated Legendre function ``P_l^m(x)`` without Condon-Shortley phase.

    Uses the diagonal seed ``P_m^m = (2m-1)!! (1-x^2)^(m/2)`` followed by the
    three-term recurrence in ``l``. Unnormalized values overflow for large
    degrees; the transforms use :func:`normalized_legendre` instead.
    """
    if not 0 <= m <= l:
        raise ValueError("need 0 <= m <= l")
    x = np.asarray(x, dtype=np.float64)
    pmm = np.ones_like(x)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    for i in range(1, m + 1):
        pmm = pmm * (2 * i - 1) * s
    if l == m:
        return pmm
    p_prev, p = pmm, x * (2 * m + 1) * pmm
    for ll in range(m + 2, l + 1):
        p_prev, p = p, ((2 * ll - 1) * x * p - (ll + m - 1) * p_prev) / (ll - m)
    return p


def normalized_legendre(bandwidth, theta):
    """Orthonormalized Legendre table ``N_lm P_l^m(cos theta)``.

    Shape ``(B, B, len(theta))`` indexed ``[l, m, j]``, zero for ``m > l``.
    Computed with the normalized recurrences so no factorials appear; stable
    for bandwidths in the hundreds.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    x, s = np.cos(theta), np.sin(theta)
    B = bandwidth
    out = np.zeros((B, B, theta.size))
    diag = np.full(theta.size, 1.0 / np.sqrt(4 * np.pi))
    for m in range(B):
        if m > 0:
            diag = diag * np.sqrt((2 * m + 1) / (2.0 * m)) * s
        out[m, m] = diag
        if m + 1 < B:
            out[m + 1, m] = np.sqrt(2 * m + 3.0) * x * diag
        for l in range(m + 2, B):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def _phase(m):
    """Condon-Shortley sign of ``Y_l^m`` relative to ``N P_l^|m| e^{imphi}``."""
    m = np.asarray(m)
    return np.where((m > 0) & (m % 2 == 1), -1.0, 1.0)


def spherical_harmonics(bandwidth, theta, phi):
    """All ``Y_l^m`` with ``l < B`` at points ``(theta, phi)``; shape ``(B*B, N)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    lam = normalized_legendre(bandwidth, theta)
    l, m = degree_order(bandwidth)
    return (_phase(m)[:, None] * lam[l, np.abs(m)]) * np.exp(1j * m[:, None] * phi[None, :])


def evaluate(spectrum, theta, phi):
    """Evaluate the expansion at arbitrary points; returns ``(N, K)`` complex."""
    Y = spherical_harmonics(spectrum.bandwidth, theta, phi)
    return Y.T @ spectrum.coefficients


def sft(f):
    """Forward spherical Fourier transform of every channel.

    ``F_l^m = (2pi / 2B) sum_j w_j sum_k f(theta_j, phi_k) conj(Y_l^m)``; the
    azimuthal sum is a DFT per polar row.
    """
    grid = f.grid
    B = grid.bandwidth
    B2 = 2 * B
    lam = normalized_legendre(B, grid.thetas)  # [l, m, j]
    G = np.fft.fft(f.values, axis=1)  # [j, m mod 2B, K]
    l, m = degree_order(B)
    weighted = G * grid.weights[:, None, None]
    rows = weighted[:, np.mod(m, B2), :]  # [j, slot, K]
    legendre = lam[l, np.abs(m)]  # [slot, j]
    coeffs = np.einsum("sj,jsk->sk", legendre, rows) * _phase(m)[:, None]
    return SphericalSpectrum(B, coeffs * (2 * np.pi / B2), f.channels)


def isft(spectrum, grid):
    """Synthesize real samples on ``grid`` from a spectrum.

    The grid bandwidth may exceed the spectrum's (zero padding). The imaginary
    part is discarded; it is at round-off level for conjugate-symmetric input.
    """
    B = spectrum.bandwidth
    if grid.bandwidth < B:
        raise ValueError(
            f"grid bandwidth {grid.bandwidth} is below spectrum bandwidth {B}"
        )
    B2 = 2 * grid.bandwidth
    lam = normalized_legendre(B, grid.thetas)
    l, m = degree_order(B)
    legendre = lam[l, np.abs(m)] * _phase(m)[:, None]  # [slot, j]
    K = spectrum.n_channels
    rows = np.zeros((B2, B2, K), dtype=np.complex128)
    contrib = legendre[:, :, None] * spectrum.coefficients[:, None, :]  # [slot, j, K]
    for mm in range(-(B - 1), B):
        sel = m == mm
        rows[:, mm % B2, :] = contrib[sel].sum(axis=0)
    values = np.fft.ifft(rows, axis=1) * B2
    return SphericalFunction(grid, values.real, spectrum.channels)


def random_spectrum(bandwidth, rng, band_limit=None, n_channels=1):
    """Random spectrum of a real band-limited function (``l < band_limit``)."""
    band_limit = bandwidth if band_limit is None else band_limit
    l, m = degree_order(bandwidth)
    c = rng.standard_normal((l.size, n_channels)) + 1j * rng.standard_normal((l.size, n_channels))
    c[m == 0] = c[m == 0].real
    for ll in range(bandwidth):
        for mm in range(1, ll + 1):
            c[coeff_index(ll, -mm)] = (-1) ** mm * np.conj(c[coeff_index(ll, mm)])
    c[l >= band_limit] = 0.0
    return SphericalSpectrum(bandwidth, c)


def total_energy(spectrum):
    return float(np.sum(np.abs(spectrum.coefficients) ** 2))


__all__ = [
    "SphericalGrid",
    "SphericalFunction",
    "SphericalSpectrum",
    "make_grid",
    "project_to_sphere",
    "sample_onto_grid",
    "associated_legendre",
    "normalized_legendre",
    "spherical_harmonics",
    "evaluate",
    "sft",
    "isft",
    "random_spectrum",
    "coeff_index",
    "degree_order",
]
