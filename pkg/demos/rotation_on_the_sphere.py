"""
Rotation search on the sphere
=============================

A band-limited function is rotated, both copies are expanded in spherical
harmonics, and the correlation over all rotations is evaluated on a grid.
The peak and its neighbors give a Bingham distribution over the rotation.
"""

import numpy as np

from specreg import quaternion as quat
from specreg import so3, sphere, stats

rng = np.random.default_rng(4)
B = 24

# random real function with degrees below 12
F = sphere.random_spectrum(B, rng, band_limit=12)
grid = sphere.make_grid(B)
f = sphere.isft(F, grid)
print(f"sphere grid {grid.shape}, energy {sphere.total_energy(F):.2f}")

# rotate by resampling the function at R^-1 w, then transform back
q_true = quat.random_uniform(rng)
R = quat.to_matrix(q_true)
T, P = np.meshgrid(grid.thetas, grid.phis, indexing="ij")
dirs = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], -1).reshape(-1, 3) @ R
theta = np.arccos(np.clip(dirs[:, 2], -1, 1))
phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * np.pi)
g = sphere.evaluate(F, theta, phi).real.reshape(*grid.shape, 1)
G = sphere.sft(sphere.SphericalFunction(grid, g))

# the degree energies do not change under rotation
print("max degree-energy change:", float(np.abs(G.degree_energy() - F.degree_energy()).max()))

# correlate target G with source F over SO(3)
corr = so3.so3_correlate(G, F, pad_factor=2)
samples = so3.extract_rotation_samples(corr, n_neighbors=4)
peak = samples.quaternions[0]
print(f"grid cell {np.degrees(corr.cell_size):.2f} deg, "
      f"peak error {np.degrees(quat.geodesic_distance(peak, q_true)):.2f} deg")

# fit a Bingham distribution to the weighted peak neighborhood
b = stats.fit_bingham(samples)
mode = stats.bingham_mode(b)
print(f"Bingham mode error {np.degrees(quat.geodesic_distance(mode, q_true)):.2f} deg, Z = {np.round(b.Z, 1)}")
