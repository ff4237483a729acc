"""Rotation search by correlating spherical spectra over SO(3).

Rotations are parameterized by intrinsic ZYZ Euler angles,
``R = Rz(alpha) Ry(beta) Rz(gamma)``, and act on functions by
``(R h)(w) = h(R^-1 w)``. With Wigner matrices
``D^l_{m'm}(alpha, beta, gamma) = exp(-i m' alpha) d^l_{m'm}(beta) exp(-i m gamma)``
the rotated expansion is ``(R h)_l^{m'} = sum_m D^l_{m'm} h_l^m`` and

    C(R) = <f, R h> = sum_l sum_{m', m} F_l^{m'} conj(H_l^m) d^l_{m'm}(beta)
                      exp(i (m' alpha + m gamma))

is evaluated per polar node ``beta_j`` followed by a 2D inverse DFT over
``(alpha, gamma)``. For ``f = R0 h`` the maximum sits at ``R0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from . import quaternion as quat

# entries per beta-chunk of the Wigner recurrence, bounds peak memory
_CHUNK_ELEMS = 1 << 22


def _orders(L):
    """Order grids ``(m', m)`` for ``|m|, |m'| < L``, shape ``(2L-1, 2L-1)``."""
    m = np.arange(-(L - 1), L)
    return np.meshgrid(m, m, indexing="ij")


def _seed(mp, m, betas):
    """``d^{l0}_{m'm}(beta)`` at ``l0 = max(|m|, |m'|)`` (single-term closed form).

    Evaluated in log space; values that underflow come out as exact zeros.
    """
    l0 = np.maximum(np.abs(mp), np.abs(m))
    s = np.maximum(0, m - mp)
    lg = np.vectorize(lgamma, otypes=[float])
    log_coef = 0.5 * (lg(l0 + mp + 1) + lg(l0 - mp + 1) + lg(l0 + m + 1) + lg(l0 - m + 1)) - (
        lg(l0 + m - s + 1) + lg(s + 1) + lg(mp - m + s + 1) + lg(l0 - mp - s + 1)
    )
    sign = np.where((mp - m + s) % 2 == 0, 1.0, -1.0)
    a = (2 * l0 + m - mp - 2 * s)[..., None].astype(float)
    b = (mp - m + 2 * s)[..., None].astype(float)
    c = np.cos(np.asarray(betas) / 2.0)
    sn = np.sin(np.asarray(betas) / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lc, ls = np.log(c), np.log(sn)
        ta = np.where(a == 0, 0.0, a * lc)
        tb = np.where(b == 0, 0.0, b * ls)
        val = np.exp(log_coef[..., None] + ta + tb)
    return sign[..., None] * np.nan_to_num(val, nan=0.0, posinf=0.0)


def iter_wigner_d(L, betas):
    """Yield ``(l, d)`` for ``l = 0 .. L-1``.

    ``d`` has shape ``(2L-1, 2L-1, len(betas))`` and holds ``d^l_{m'm}(beta)`` at
    ``[m' + L - 1, m + L - 1]``; entries with ``max(|m|, |m'|) > l`` are zero.
    The three-term recurrence in ``l`` at fixed ``(m', m)`` is seeded by the
    closed form at ``l = max(|m|, |m'|)``; it is forward-stable, so no explicit
    renormalization is required (orthogonality is checked in the tests up to
    ``l = 128``).
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    mp, m = _orders(L)
    l0 = np.maximum(np.abs(mp), np.abs(m))
    seed = _seed(mp, m, betas)
    cb = np.cos(betas)[None, None, :]
    prev = np.zeros(mp.shape + betas.shape)
    cur = np.zeros_like(prev)
    mm = (mp * m).astype(float)
    m2, mp2 = (m * m).astype(float), (mp * mp).astype(float)
    for l in range(L):
        if l == 0:
            nxt = np.where((l0 == 0)[..., None], seed, 0.0)
        else:
            k = l - 1  # step from degree k to k + 1 = l
            with np.errstate(divide="ignore", invalid="ignore"):
                A = (k + 1) * (2 * k + 1) / np.sqrt(np.clip(((k + 1) ** 2 - m2) * ((k + 1) ** 2 - mp2), 0, None))
                mid = mm / (k * (k + 1)) if k > 0 else np.zeros_like(mm)
                if k > 0:
                    Bc = np.sqrt(np.clip((k * k - m2) * (k * k - mp2), 0, None)) / (k * (2 * k + 1))
                else:
                    Bc = np.zeros_like(mm)
            live = l0 < l
            A, Bc = np.where(live, A, 0.0), np.where(live, Bc, 0.0)
            rec = A[..., None] * ((cb - mid[..., None]) * cur - Bc[..., None] * prev)
            nxt = np.where(live[..., None], rec, np.where((l0 == l)[..., None], seed, 0.0))
        prev, cur = cur, nxt
        yield l, cur


def wigner_d(l, beta):
    """Wigner small-d matrix ``d^l(beta)``, shape ``(2l+1, 2l+1)``.

    Row index ``m' + l``, column index ``m + l``.
    """
    for ll, d in iter_wigner_d(l + 1, [beta]):
        if ll == l:
            return d[..., 0].copy()
    raise AssertionError("unreachable")


def wigner_d_direct(l, mp, m, beta):
    """Reference ``d^l_{m'm}(beta)`` from the explicit factorial sum (small ``l``)."""
    from math import factorial

    total = 0.0
    c, s = np.cos(beta / 2.0), np.sin(beta / 2.0)
    pre = np.sqrt(
        float(factorial(l + mp) * factorial(l - mp) * factorial(l + m) * factorial(l - m))
    )
    for k in range(max(0, m - mp), min(l + m, l - mp) + 1):
        den = factorial(l + m - k) * factorial(k) * factorial(mp - m + k) * factorial(l - mp - k)
        total += (-1) ** (mp - m + k) * c ** (2 * l + m - mp - 2 * k) * s ** (mp - m + 2 * k) / den
    return pre * total


@dataclass(frozen=True, eq=False)
class WignerTable:
    """Precomputed ``d^l(beta_j)`` for all ``l < L`` on a set of polar nodes.

    ``matrices[l]`` has shape ``(len(betas), 2l+1, 2l+1)``.
    """

    L: int
    betas: np.ndarray
    matrices: tuple

    @classmethod
    def build(cls, L, betas):
        betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
        mats = []
        for l, d in iter_wigner_d(L, betas):
            sl = slice(L - 1 - l, L + l)
            mats.append(np.moveaxis(d[sl, sl], -1, 0).copy())
        return cls(L, betas, tuple(mats))

    def __getitem__(self, l):
        return self.matrices[l]


@dataclass(frozen=True, eq=False)
class So3CorrelationGrid:
    """``|C|`` sampled on a ``R x R x R`` grid indexed ``[alpha, beta, gamma]``.

    ``alpha_a = 2 pi a / R``, ``beta_j = pi j / R``, ``gamma_c = 2 pi c / R`` with
    ``R = 2 * bandwidth * pad_factor``.
    """

    magnitudes: np.ndarray
    bandwidth: int
    pad_factor: int

    @property
    def resolution(self):
        return self.magnitudes.shape[0]

    @property
    def cell_size(self):
        """Azimuthal grid step in radians, ``pi / (pad_factor * bandwidth)``."""
        return 2 * np.pi / self.resolution

    def angles(self, index):
        a, j, c = np.asarray(index).T if np.ndim(index) > 1 else index
        R = self.resolution
        return 2 * np.pi * np.asarray(a) / R, np.pi * np.asarray(j) / R, 2 * np.pi * np.asarray(c) / R

    def quaternion(self, index):
        return quat.from_zyz(*self.angles(index))


def _single(spectrum):
    c = spectrum.coefficients
    if c.shape[1] != 1:
        raise ValueError("correlation needs single-channel spectra; fuse channels first")
    return c[:, 0]


def so3_correlate(F, H, pad_factor=2):
    """Correlation magnitude ``|<f, R h>|`` over the ZYZ grid.

    ``F`` is the target spectrum, ``H`` the source; the argmax is the rotation
    that maps the source onto the target.
    """
    if F.bandwidth != H.bandwidth:
        raise ValueError(f"bandwidth mismatch: {F.bandwidth} vs {H.bandwidth}")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    B = F.bandwidth
    f, h = _single(F), _single(H)
    R = 2 * B * pad_factor
    M = 2 * B - 1
    # T^l[m', m] = F_l^m' conj(H_l^m), laid out on the (2B-1)^2 order grid
    T = np.zeros((B, M, M), dtype=np.complex128)
    for l in range(B):
        sl = slice(l * l, (l + 1) * (l + 1))
        o = slice(B - 1 - l, B + l)
        T[l, o, o] = np.outer(f[sl], np.conj(h[sl]))

    betas = np.pi * np.arange(R) / R
    mags = np.empty((R, R, R))
    idx = np.mod(np.arange(-(B - 1), B), R)
    chunk = max(1, _CHUNK_ELEMS // (M * M))
    for j0 in range(0, R, chunk):
        bs = betas[j0 : j0 + chunk]
        S = np.zeros((M, M, bs.size), dtype=np.complex128)
        for l, d in iter_wigner_d(B, bs):
            o = slice(B - 1 - l, B + l)
            S[o, o] += T[l, o, o][..., None] * d[o, o]
        P = np.zeros((bs.size, R, R), dtype=np.complex128)
        P[:, idx[:, None], idx[None, :]] = np.moveaxis(S, -1, 0)
        C = np.fft.ifft2(P, axes=(1, 2)) * (R * R)  # [beta, alpha, gamma]
        mags[:, j0 : j0 + bs.size, :] = np.abs(C).transpose(1, 0, 2)
    return So3CorrelationGrid(mags, B, pad_factor)


@dataclass(frozen=True, eq=False)
class RotationSampleSet:
    """Weighted unit quaternions; the first row is the correlation peak."""

    quaternions: np.ndarray
    weights: np.ndarray
    magnitudes: np.ndarray = None

    def __post_init__(self):
        q = quat.normalize(np.atleast_2d(self.quaternions))
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != q.shape[0]:
            raise ValueError("one weight per quaternion is required")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be non-negative with a positive sum")
        object.__setattr__(self, "quaternions", q)
        object.__setattr__(self, "weights", w / w.sum())

    def __len__(self):
        return self.quaternions.shape[0]


def _neighborhood(shape, center, wrap):
    """26-connected neighbors of ``center``; ``wrap[i]`` selects periodic axes."""
    out = []
    for off in np.ndindex(3, 3, 3):
        d = np.array(off) - 1
        if not d.any():
            continue
        p = np.array(center) + d
        ok = True
        for ax in range(3):
            if wrap[ax]:
                p[ax] %= shape[ax]
            elif not 0 <= p[ax] < shape[ax]:
                ok = False
        if ok:
            out.append(tuple(p))
    return sorted(set(out))


def peak_with_neighbors(mags, n_neighbors, wrap):
    """Global argmax plus its strongest 26-neighbors (ties: lowest linear index).

    Zero-magnitude neighbors are dropped. Returns a list of index tuples.
    """
    if n_neighbors < 1:
        raise ValueError("n_neighbors must be >= 1")
    if not np.any(mags > 0):
        raise ValueError("correlation is identically zero")
    peak = np.unravel_index(int(np.argmax(mags)), mags.shape)
    nb = _neighborhood(mags.shape, peak, wrap)
    nb = [p for p in nb if mags[p] > 0]
    lin = [np.ravel_multi_index(p, mags.shape) for p in nb]
    order = sorted(range(len(nb)), key=lambda i: (-mags[nb[i]], lin[i]))
    return [tuple(int(v) for v in peak)] + [nb[i] for i in order[:n_neighbors]]


def extract_rotation_samples(grid, n_neighbors=4):
    """Peak rotation and its neighbors as weighted quaternions.

    Neighborhoods wrap in alpha and gamma and stop at the beta boundary.
    Weights are the correlation magnitudes normalized to sum to one.
    """
    cells = peak_with_neighbors(grid.magnitudes, n_neighbors, wrap=(True, False, True))
    idx = np.array(cells)
    q = grid.quaternion(idx)
    mags = grid.magnitudes[tuple(idx.T)]
    return RotationSampleSet(q, mags, mags)
