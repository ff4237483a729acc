"""Procedural "urban box" scenes: a ground plane plus axis-aligned boxes.

Every surface carries its own intensity so that range and intensity are
complementary channels. Generation is deterministic for a given seed.
"""

from __future__ import annotations

import numpy as np

from .cloud import PointCloud


def _sample_rect(rng, n, origin, u, v):
    a = rng.random((n, 1))
    b = rng.random((n, 1))
    return origin + a * u + b * v


def urban_box_scene(
    seed=0,
    n_points=5000,
    n_boxes=8,
    radius=25.0,
    sensor_height=1.8,
    min_distance=6.0,
    n_patches=6,
):
    """Surface-sampled scene around a sensor at the origin.

    Returns a cloud with an ``intensity`` channel in ``[0, 1]``. Points are
    allocated to surfaces in proportion to their area.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    faces = []  # (origin, u, v, intensity)
    ground_z = -sensor_height
    for _ in range(n_boxes):
        ang = rng.uniform(0, 2 * np.pi)
        dist = rng.uniform(min_distance + 3.0, radius - 5.0)
        sx, sy = rng.uniform(2.0, 8.0, 2)
        h = rng.uniform(2.0, 10.0)
        cx, cy = dist * np.cos(ang), dist * np.sin(ang)
        x0, y0 = cx - sx / 2, cy - sy / 2
        o = np.array([x0, y0, ground_z])
        ex, ey, ez = np.array([sx, 0, 0]), np.array([0, sy, 0]), np.array([0, 0, h])
        for origin, u, v in (
            (o, ex, ez),
            (o + ey, ex, ez),
            (o, ey, ez),
            (o + ex, ey, ez),
            (o + ez, ex, ey),
        ):
            faces.append((origin, u, v, rng.uniform(0.1, 1.0)))
    areas = np.array([np.linalg.norm(np.cross(u, v)) for _, u, v, _ in faces])
    ground_area = np.pi * radius**2
    total = areas.sum() + ground_area
    n_ground = int(round(n_points * ground_area / total))
    counts = np.floor((n_points - n_ground) * areas / areas.sum()).astype(int)
    counts[: (n_points - n_ground) - counts.sum()] += 1

    pts, inten = [], []
    for (origin, u, v, val), c in zip(faces, counts):
        pts.append(_sample_rect(rng, c, origin, u, v))
        inten.append(np.full(c, val))

    # ground: uniform on an annulus, a few painted patches
    r = np.sqrt(rng.uniform(1.0, radius**2, n_ground))
    t = rng.uniform(0, 2 * np.pi, n_ground)
    g = np.column_stack([r * np.cos(t), r * np.sin(t), np.full(n_ground, ground_z)])
    gi = np.full(n_ground, 0.2)
    for _ in range(n_patches):
        c = rng.uniform(-radius * 0.7, radius * 0.7, 2)
        half = rng.uniform(1.0, 4.0, 2)
        inside = np.all(np.abs(g[:, :2] - c) < half, axis=1)
        gi[inside] = rng.uniform(0.6, 1.0)
    pts.append(g)
    inten.append(gi)

    points = np.concatenate(pts)
    intensity = np.concatenate(inten)
    # drop anything that fell inside the sensor's blind radius
    keep = np.linalg.norm(points, axis=1) > 0.5
    return PointCloud(points[keep], {"intensity": intensity[keep]}, frame_id=f"urban-box-{seed}")
