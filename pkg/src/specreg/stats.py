"""Bingham (rotation) and Gaussian (translation) uncertainty.

The Bingham normalizer on S^3 is reduced to a one-dimensional integral with
Hopf coordinates: for ``x`` uniform on S^3, ``u = x1^2 + x2^2`` is uniform on
``[0, 1]`` and the two remaining circle angles integrate in closed form to
modified Bessel functions::

    N(Z) = 2 pi^2 int_0^1 g12(u) g34(1 - u) du
    g_ab(t) = exp(t (z_a + z_b) / 2) I0(t (z_a - z_b) / 2)

The remaining integral is done adaptively with ``scipy.integrate.quad``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from . import quaternion as quat

# most negative concentration the fit will return (degenerate sample sets)
Z_FLOOR = -1.0e6

_QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-12, limit=400)


@dataclass(frozen=True, eq=False)
class BinghamDistribution:
    """Orientation ``M`` (columns are axes) and ascending concentrations ``Z``.

    ``Z[-1] == 0``; the mode is the last column of ``M``.
    """

    M: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=np.float64).reshape(4, 4)
        Z = np.asarray(self.Z, dtype=np.float64).reshape(4)
        if np.any(Z > 0) or not np.all(np.diff(Z) >= 0) or Z[-1] != 0:
            raise ValueError("Z must be ascending, non-positive and end with 0")
        if np.abs(M.T @ M - np.eye(4)).max() > 1e-9:
            raise ValueError("M must be orthonormal")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Z", Z)

    def pdf(self, x):
        x = np.atleast_2d(x)
        A = self.M @ np.diag(self.Z) @ self.M.T
        N, _ = bingham_normalization(self.Z)
        return np.exp(np.einsum("ni,ij,nj->n", x, A, x)) / N

    def second_moment(self):
        """``M diag(dN/dz_i / N) M^T``."""
        N, dN = bingham_normalization(self.Z)
        return self.M @ np.diag(dN / N) @ self.M.T

    def mode(self):
        return bingham_mode(self)


def _pair_terms(za, zb, t):
    """Circle average of ``exp(t (za c^2 + zb s^2))`` and its partials in za, zb."""
    x = t * abs(za - zb) / 2.0
    scale = np.exp(t * max(za, zb))
    i0 = special.ive(0, x) * scale
    i1 = special.ive(1, x) * scale
    # derivative of I0(t (za - zb) / 2) is +-I1 depending on the sign of za - zb
    s = 1.0 if za >= zb else -1.0
    g = i0
    dga = t / 2.0 * (i0 + s * i1)
    dgb = t / 2.0 * (i0 - s * i1)
    return g, dga, dgb


def bingham_normalization(Z):
    """``N(Z)`` over S^3 and its four partial derivatives ``dN/dz_i``."""
    z = np.asarray(Z, dtype=np.float64).reshape(4)
    if np.any(z > 0):
        raise ValueError("concentrations must be non-positive")

    def part(u, which):
        g12, d1, d2 = _pair_terms(z[0], z[1], u)
        g34, d3, d4 = _pair_terms(z[2], z[3], 1.0 - u)
        return (g12 * g34, d1 * g34, d2 * g34, g12 * d3, g12 * d4)[which]

    # concentrated integrands live within ~1/|z| of the ends of [0, 1]
    scales = sorted({1.0 / abs(v) for v in z if abs(v) > 2.0} | {0.5})
    points = sorted({p for s in scales for p in (s, 1.0 - s) if 0 < p < 1})
    out = np.empty(5)
    for k in range(5):
        val, err = integrate.quad(part, 0.0, 1.0, args=(k,), points=points or None, **_QUAD_OPTS)
        if not np.isfinite(val):
            raise ArithmeticError("Bingham normalizer quadrature did not converge")
        out[k] = val
    out *= 2.0 * np.pi**2
    return out[0], out[1:]


def bingham_normalization_grid(Z, nodes=48):
    """Brute-force ``N(Z)`` by product Gauss-Legendre in hyperspherical angles.

    Independent check for :func:`bingham_normalization`; only accurate for
    moderate concentrations.
    """
    z = np.asarray(Z, dtype=np.float64)
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = (x + 1) * np.pi / 2
    wt = w * np.pi / 2
    p = (x + 1) * np.pi
    wp = w * np.pi
    a, b, c = np.meshgrid(t, t, p, indexing="ij")
    W = wt[:, None, None] * wt[None, :, None] * wp[None, None, :]
    pts = np.stack(
        [
            np.cos(a),
            np.sin(a) * np.cos(b),
            np.sin(a) * np.sin(b) * np.cos(c),
            np.sin(a) * np.sin(b) * np.sin(c),
        ],
        -1,
    )
    jac = np.sin(a) ** 2 * np.sin(b)
    f = np.exp(pts**2 @ z) * jac * W
    return f.sum(), np.einsum("abc,abci->i", f, pts**2)


def _moment_eigs(Z):
    N, dN = bingham_normalization(Z)
    return dN / N


def fit_bingham(samples):
    """Moment-matching Bingham fit of weighted quaternion samples.

    The weighted scatter ``Q W Q^T`` gives ``M`` (eigenvectors) and the
    normalized eigenvalues ``lambda``. The concentrations solve
    ``dN/dz_i / N = lambda_i`` with ``z_4 = 0`` fixed, solved by bounded
    least squares on the log of both sides.
    """
    q = samples.quaternions
    w = samples.weights
    if len(q) < 1:
        raise ValueError("need at least one sample")
    # flip every sample into the peak's hemisphere
    q = q * np.where(q @ q[0] < 0, -1.0, 1.0)[:, None]
    S = (q * w[:, None]).T @ q
    lam, U = np.linalg.eigh(S)
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum()
    Z = _solve_concentration(lam)
    return BinghamDistribution(U, Z)


def moment_mismatch(Z, lam):
    """``J(Z) = || dN/N - lambda ||_2``."""
    return float(np.linalg.norm(_moment_eigs(Z) - lam))


def _solve_concentration(lam):
    lam = np.asarray(lam, dtype=np.float64)
    if lam[:3].max() <= 1e-12:
        return np.array([Z_FLOOR, Z_FLOOR, Z_FLOOR, 0.0])

    # Solve dN_i/N = lambda_i in log space on both sides: u = log(-z) keeps the
    # unknowns O(1) across six decades of concentration and the log residual
    # gives relative accuracy for the tiny lambda of a peaked fit.
    lo, hi = np.log(1e-9), np.log(-Z_FLOOR)
    target = np.log(np.clip(lam[:3], 1e-300, None))

    def residual(u):
        N, dN = bingham_normalization(np.r_[-np.exp(u), 0.0])
        return np.log(dN[:3] / N) - target

    # Gaussian-limit starting point: z_i ~ -1 / (2 lambda_i) relative to the mode
    z0 = np.array([-0.5 / max(l, 1e-12) + 0.5 / lam[3] for l in lam[:3]])
    u0 = np.clip(np.log(np.clip(-z0, 1e-9, None)), lo, hi)
    res = optimize.least_squares(residual, u0, bounds=(lo, hi), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    z = np.sort(-np.exp(res.x))
    return np.r_[z, 0.0]


def bingham_mode(b):
    """Mode quaternion, sign-normalized so that w >= 0."""
    return quat.canonical(b.M[:, np.argmax(b.Z)])


@dataclass(frozen=True, eq=False)
class GaussianEstimate:
    mean: np.ndarray
    covariance: np.ndarray


def fit_gaussian(samples, weights):
    """Weighted mean and covariance ``(T - mu) W (T - mu)^T``, PSD-projected."""
    T = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != T.shape[0] or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("need one non-negative weight per sample with a positive sum")
    w = w / w.sum()
    mu = w @ T
    D = T - mu
    cov = (D * w[:, None]).T @ D
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < 0:
        cov = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
    return GaussianEstimate(mu, cov)


def uncertainty_criteria(cov, atol=1e-9):
    """A-, D- and E-optimality: trace, determinant and largest eigenvalue."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be square")
    if np.abs(cov - cov.T).max() > atol * max(1.0, np.abs(cov).max()):
        raise ValueError("covariance must be symmetric")
    eig = np.linalg.eigvalsh(cov)
    return float(np.trace(cov)), float(np.linalg.det(cov)), float(eig.max())
