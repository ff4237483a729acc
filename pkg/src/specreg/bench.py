"""Synthetic benchmark harness: random truths, degradations and sweeps.

Every trial draws its scene seed, truth transform and degradation seed from
one ``numpy.random.SeedSequence`` rooted at the caller's seed, so a fixed
seed reproduces the table exactly. Timings are left out of the records
unless asked for, since they are the only non-deterministic column.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import replace

import numpy as np

from . import quaternion as quat
from .cloud import DegradationSpec, RigidTransform, apply_transform
from .pipeline import RegistrationConfig, evaluate, register
from .scene import urban_box_scene

SWEEP_KINDS = ("none", "psnr", "sparsify", "overlap")  # "bandwidth" rows come from sweep_bandwidth

BASE_COLUMNS = [
    "sweep", "level", "trial", "scene_seed", "bandwidth", "n_voxels", "fov", "channels",
    "truth_qw", "truth_qx", "truth_qy", "truth_qz", "truth_tx", "truth_ty", "truth_tz",
    "est_qw", "est_qx", "est_qy", "est_qz", "est_tx", "est_ty", "est_tz",
    "rot_err_deg", "trans_err_m", "trans_err_vox",
    "rot_a", "rot_d", "rot_e", "trans_a", "trans_d", "trans_e",
    "peak_rot", "peak_trans",
]  # fmt: skip
TIMING_COLUMNS = ["time_rot_ms", "time_trans_ms", "time_total_ms"]


def random_truth(rng, max_translation=1.0):
    """Uniform rotation and a translation uniform in ``[-m, m]^3``."""
    return RigidTransform(quat.random_uniform(rng), rng.uniform(-max_translation, max_translation, 3))


def make_pair(scene, truth, degradation=None):
    """``(source, target)`` with ``target = R source + t`` before degradation.

    The degradation acts on the source only, in the source frame.
    """
    source = apply_transform(scene, truth.inverse())
    if degradation is not None:
        source = degradation.apply(source)
    return source, scene


def _degradation(kind, level, seed, axis):
    if kind == "none":
        return None
    if kind == "psnr":
        return DegradationSpec(psnr_db=level, seed=seed, axis=axis)
    if kind == "sparsify":
        return DegradationSpec(sparsify_fraction=level, seed=seed, axis=axis)
    if kind == "overlap":
        return DegradationSpec(overlap_fraction=level, seed=seed, axis=axis)
    raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")


def _trial_seeds(seed, n):
    for child in np.random.SeedSequence(seed).spawn(n):
        a, b, c = child.generate_state(3, dtype=np.uint32)
        yield int(a), int(b), int(c)


def trial_setups(seed, trials, max_translation=1.0, scene_kwargs=None):
    """Yield ``(trial, scene_seed, scene, truth, degradation_seed)`` per trial."""
    scene_kwargs = dict(scene_kwargs or {})
    for i, (scene_seed, truth_seed, deg_seed) in enumerate(_trial_seeds(seed, trials)):
        truth = random_truth(np.random.Generator(np.random.PCG64(truth_seed)), max_translation)
        yield i, scene_seed, urban_box_scene(seed=scene_seed, **scene_kwargs), truth, deg_seed


def run_trial(cfg, truth, scene, degradation=None):
    """Register one synthetic pair; returns ``(result, rot_err_deg, trans_err_m)``."""
    source, target = make_pair(scene, truth, degradation)
    result = register(source, target, cfg)
    return (result, *evaluate(result, truth))


def _record(kind, level, trial, scene_seed, cfg, truth, result, rot_err, trans_err, timings):
    crit = result.criteria()
    rec = {
        "sweep": kind,
        "level": level,
        "trial": trial,
        "scene_seed": scene_seed,
        "bandwidth": cfg.bandwidth,
        "n_voxels": cfg.n_voxels,
        "fov": result.fov,
        "channels": "+".join(cfg.channels),
    }
    rec.update(zip(("truth_qw", "truth_qx", "truth_qy", "truth_qz"), map(float, truth.rotation)))
    rec.update(zip(("truth_tx", "truth_ty", "truth_tz"), map(float, truth.translation)))
    rec.update(zip(("est_qw", "est_qx", "est_qy", "est_qz"), map(float, result.rotation)))
    rec.update(zip(("est_tx", "est_ty", "est_tz"), map(float, result.translation)))
    rec["rot_err_deg"] = rot_err
    rec["trans_err_m"] = trans_err
    rec["trans_err_vox"] = trans_err / result.voxel_size
    for stage in ("rot", "trans"):
        for key in "ade":
            rec[f"{stage}_{key}"] = crit[stage][key]
    rec["peak_rot"] = result.peak_rot
    rec["peak_trans"] = result.peak_trans
    if timings:
        rec["time_rot_ms"] = result.timings_ms["rot"]
        rec["time_trans_ms"] = result.timings_ms["trans"]
        rec["time_total_ms"] = result.timings_ms["total"]
    return rec


def run_benchmark(
    kind="none",
    levels=(None,),
    trials=1,
    cfg=None,
    seed=0,
    max_translation=1.0,
    axis="x",
    timings=False,
    scene_kwargs=None,
):
    """One record per (level, trial).

    Trial ``i`` uses the same scene and truth at every level, so levels are
    compared on identical pairs.
    """
    cfg = cfg or RegistrationConfig()
    records = []
    for level in levels:
        for i, scene_seed, scene, truth, deg_seed in trial_setups(seed, trials, max_translation, scene_kwargs):
            deg = _degradation(kind, level, deg_seed, axis)
            result, rot_err, trans_err = run_trial(cfg, truth, scene, deg)
            records.append(
                _record(kind, level, i, scene_seed, cfg, truth, result, rot_err, trans_err, timings)
            )
    return records


def sweep_bandwidth(bandwidths, n_voxels, trials=1, cfg=None, seed=0, max_translation=1.0, timings=True):
    """Errors, criteria and timings over the grid of ``(B, n)`` pairs."""
    cfg = cfg or RegistrationConfig()
    records = []
    for B in bandwidths:
        for n in n_voxels:
            sub = replace(cfg, bandwidth=int(B), n_voxels=int(n))
            for rec in run_benchmark("none", (None,), trials, sub, seed, max_translation, timings=timings):
                records.append({**rec, "sweep": "bandwidth", "level": int(B)})
    return records


def columns(timings=False):
    return BASE_COLUMNS + (TIMING_COLUMNS if timings else [])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) and v > 0 else repr(v)
    return str(v)


def write_csv(records, fh, timings=False):
    """CSV with a header row always present; floats use their shortest repr."""
    w = csv.writer(fh, lineterminator="\n")
    cols = columns(timings)
    w.writerow(cols)
    for rec in records:
        w.writerow([_fmt(rec.get(c)) for c in cols])


def records_to_csv(records, timings=False):
    buf = io.StringIO()
    write_csv(records, buf, timings)
    return buf.getvalue()
