"""
Noise, sparsity and channel fusion
==================================

A small benchmark: the same seeded pairs are registered with the range
channel alone and with range and intensity fused, under increasing noise,
then under sparsification. Four trials per row keep this quick, so single
rows fluctuate; the acceptance suite uses ten.
"""

import numpy as np

from specreg import RegistrationConfig
from specreg.bench import run_benchmark

range_only = RegistrationConfig(bandwidth=32, n_voxels=64)
fused = RegistrationConfig(bandwidth=32, n_voxels=64, channels=("range", "intensity"))


def medians(records):
    rot = np.median([r["rot_err_deg"] for r in records])
    vox = np.median([r["trans_err_vox"] for r in records])
    return f"{rot:5.2f} deg {vox:5.2f} vox"


print("PSNR   range-only          fused")
for psnr in (50.0, 45.0, 40.0):
    a = run_benchmark("psnr", [psnr], trials=4, cfg=range_only, seed=11)
    b = run_benchmark("psnr", [psnr], trials=4, cfg=fused, seed=11)
    print(f"{psnr:4.0f}   {medians(a)}   {medians(b)}")

print()
print("removed   range-only")
for frac in (0.0, 0.5, 0.9):
    print(f"{frac:7.1f}   {medians(run_benchmark('sparsify', [frac], trials=4, cfg=range_only, seed=11))}")
