"""Unit-quaternion helpers.

Quaternions are stored scalar-first as ``(w, x, y, z)`` float arrays. All
rotations are active: ``quat_to_matrix(q) @ p`` rotates the point ``p``.
"""

from __future__ import annotations

import numpy as np


def normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot normalize a zero quaternion")
    return q / n


def multiply(a, b):
    """Hamilton product ``a * b`` (broadcasts over leading axes)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conjugate(q):
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def to_matrix(q):
    """Rotation matrix of a unit quaternion (or a stack of them)."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=np.float64), -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )


def from_matrix(R):
    """Unit quaternion of a rotation matrix (Shepperd's method), w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    diag = np.diag(R)
    k = int(np.argmax(np.r_[tr, diag]))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return canonical(normalize(q))


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return np.r_[np.cos(angle / 2.0), np.sin(angle / 2.0) * axis]


def from_zyz(alpha, beta, gamma):
    """Quaternion of the intrinsic ZYZ rotation ``Rz(alpha) Ry(beta) Rz(gamma)``.

    Vectorized: angle arrays of equal shape give a ``(..., 4)`` stack.
    """
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, float), np.asarray(beta, float), np.asarray(gamma, float)
    )
    # closed form of qz(alpha) * qy(beta) * qz(gamma)
    cb, sb = np.cos(beta / 2.0), np.sin(beta / 2.0)
    sum_, diff = (alpha + gamma) / 2.0, (alpha - gamma) / 2.0
    return np.stack(
        [cb * np.cos(sum_), -sb * np.sin(diff), sb * np.cos(diff), cb * np.sin(sum_)], axis=-1
    )


def to_zyz(q):
    """ZYZ Euler angles ``(alpha, beta, gamma)`` with alpha, gamma in [0, 2pi)."""
    R = to_matrix(normalize(q))
    beta = np.arccos(np.clip(R[2, 2], -1.0, 1.0))
    if np.sin(beta) > 1e-12:
        alpha = np.arctan2(R[1, 2], R[0, 2])
        gamma = np.arctan2(R[2, 1], -R[2, 0])
    elif R[2, 2] > 0:
        alpha, gamma = np.arctan2(R[1, 0], R[0, 0]), 0.0
    else:
        alpha, gamma = np.arctan2(-R[1, 0], -R[0, 0]), 0.0
    return np.mod(alpha, 2 * np.pi), beta, np.mod(gamma, 2 * np.pi)


def canonical(q):
    """Pick the representative of ``{q, -q}`` with w >= 0.

    When w == 0 the first nonzero component is made positive.
    """
    q = np.array(q, dtype=np.float64)
    for c in q:
        if c != 0.0:
            return q if c > 0 else -q
    return q


def geodesic_distance(a, b):
    """Rotation angle (radians) between the rotations of two unit quaternions."""
    a, b = normalize(a), normalize(b)
    if np.dot(a, b) < 0:
        b = -b
    # 2 atan2(|a - b|, |a + b|) is the angle between a and b in R^4 and keeps
    # full precision for tiny angles, where arccos does not
    return float(4.0 * np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def random_uniform(rng, size=None):
    """Uniform rotations: normalized 4D standard-normal draws."""
    shape = (4,) if size is None else (size, 4)
    return normalize(rng.standard_normal(shape))
