"""Command-line frontend: ``specreg {register,synth,bench,eval,sweep}``.

Exit codes: 0 success, 2 input error, 3 numerical failure. Registration
flags may also come from a ``--config`` file of ``flag = value`` lines
(flag names without the leading dashes); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bench
from .cloud import OCCUPANCY, RANGE, DegradationSpec, RigidTransform
from .io import FORMATS, CloudFormatError, load_cloud, save_cloud
from .pipeline import RegistrationConfig, RegistrationFailure, evaluate, register
from .scene import urban_box_scene

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
SYNTHETIC_CHANNELS = (RANGE, OCCUPANCY, "intensity")

# flag name -> (RegistrationConfig field, parser)
_CFG_FLAGS = {
    "btilde": ("bandwidth", int),
    "nvox": ("n_voxels", int),
    "fov": ("fov", float),
    "channels": ("channels", lambda s: tuple(c.strip() for c in s.split(",") if c.strip())),
    "pad-rot": ("pad_rot", int),
    "pad-trans": ("pad_trans", int),
    "pyramid-levels": ("pyramid_levels", int),
    "neighbors": ("n_neighbors", int),
    "seed": ("seed", int),
}


class InputError(Exception):
    pass


def _add_cfg_flags(p):
    g = p.add_argument_group("registration")
    g.add_argument("--btilde", help="spherical bandwidth (default 120)")
    g.add_argument("--nvox", help="voxels per axis (default 200)")
    g.add_argument("--fov", help="voxel cube edge in meters (default: auto)")
    g.add_argument("--channels", help="comma-separated channel names (default: range)")
    g.add_argument("--pad-rot", help="SO(3) zero-padding factor (default 2)")
    g.add_argument("--pad-trans", help="3D zero-padding factor (default 2)")
    g.add_argument("--pyramid-levels", help="fusion pyramid depth (default 5)")
    g.add_argument("--neighbors", help="neighbors kept around each peak (default 4)")
    g.add_argument("--seed", help="seed for every random draw (default 0)")
    g.add_argument("--config", help="file of 'flag = value' lines")


def read_config_file(path):
    """Parse ``flag = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'flag = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        out[key] = value
    return out


def build_config(args):
    """Merge defaults, the config file and explicit flags (in that order)."""
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    for flag in _CFG_FLAGS:
        v = getattr(args, flag.replace("-", "_"), None)
        if v is not None:
            raw[flag] = v
    kwargs = {}
    for flag, value in raw.items():
        if flag not in _CFG_FLAGS:
            continue
        field, conv = _CFG_FLAGS[flag]
        if flag == "fov" and str(value).lower() == "auto":
            kwargs[field] = None
            continue
        try:
            kwargs[field] = conv(value)
        except ValueError as exc:
            raise InputError(f"--{flag}: cannot parse {value!r}") from exc
    try:
        return RegistrationConfig(**kwargs), raw
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def parse_levels(text, step=None):
    """``"50,45,40"`` or ``"0.1..1.0"`` (with ``step``) into a list of floats."""
    text = text.strip()
    if ".." in text:
        lo, hi = (float(s) for s in text.split("..", 1))
        if step is None or step <= 0:
            raise InputError("a range needs a positive --step")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        if count < 1:
            raise InputError(f"empty range {text!r}")
        return [round(lo + i * step, 10) for i in range(count)]
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse level list {text!r}") from exc


def _load(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    try:
        return load_cloud(p)
    except (OSError, CloudFormatError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _truth_from_json(path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read truth file {path}: {exc}") from exc
    d = d.get("truth", d) or {}
    try:
        return RigidTransform(d["q"], d["t"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: truth needs 'q' and 't'") from exc


def result_document(result, truth=None, timings=True):
    """The JSON result record: config, truth, estimate, uncertainty, errors."""
    doc = result.to_dict(timings=timings)
    doc["truth"] = None
    doc["errors"] = None
    if truth is not None:
        rot, trans = evaluate(result, truth)
        doc["truth"] = {"q": truth.rotation.tolist(), "t": truth.translation.tolist()}
        doc["errors"] = {"rot_deg": rot, "trans_m": trans}
    return doc


def flatten(doc, prefix=""):
    """Nested dicts and lists to ``a.b.0`` style keys (for single-row CSV)."""
    out = {}
    if isinstance(doc, dict):
        for k, v in doc.items():
            out.update(flatten(v, f"{prefix}{k}."))
    elif isinstance(doc, (list, tuple)):
        for i, v in enumerate(doc):
            out.update(flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = doc
    return out


def _csv_one(flat):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(flat))
    w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in flat.values()])
    return buf.getvalue()


def cmd_register(args):
    cfg, _ = build_config(args)
    source = _load(args.source)
    target = _load(args.target)
    truth = _truth_from_json(args.truth) if args.truth else None
    try:
        result = register(source, target, cfg)
    except KeyError as exc:
        raise InputError(exc.args[0]) from exc
    doc = result_document(result, truth, timings=not args.no_timings)
    if args.format == "csv":
        text = _csv_one(flatten(doc))
    else:
        text = json.dumps(doc, indent=2) + "\n"
    _emit(text, args.out)


def _degradation_from_args(args):
    chosen = [(k, getattr(args, k)) for k in ("psnr", "sparsify", "overlap") if getattr(args, k) is not None]
    if len(chosen) > 1:
        raise InputError("choose at most one of --psnr, --sparsify, --overlap")
    return chosen[0] if chosen else (None, None)


def cmd_synth(args):
    rng = np.random.Generator(np.random.PCG64(args.seed))
    scene_seed = int(rng.integers(2**31))
    truth = bench.random_truth(rng, args.max_translation)
    kind, value = _degradation_from_args(args)
    deg = None
    if kind is not None:
        level = float(value)
        kw = {"psnr": "psnr_db", "sparsify": "sparsify_fraction", "overlap": "overlap_fraction"}[kind]
        try:
            deg = DegradationSpec(**{kw: level}, axis=args.axis, seed=int(rng.integers(2**31)))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    scene = urban_box_scene(seed=scene_seed, n_points=args.points)
    try:
        source, target = bench.make_pair(scene, truth, deg)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_cloud(source, out / f"source.{args.cloud_format}")
    save_cloud(target, out / f"target.{args.cloud_format}")
    doc = {
        "truth": {"q": truth.rotation.tolist(), "t": truth.translation.tolist()},
        "scene_seed": scene_seed,
        "degradation": None if kind is None else {kind: float(value), "axis": args.axis},
    }
    text = json.dumps(doc, indent=2) + "\n"
    (out / "truth.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _table(records, args, timings):
    if args.format == "json":
        cols = bench.columns(timings)
        return json.dumps([{c: r.get(c) for c in cols} for r in records], indent=2) + "\n"
    return bench.records_to_csv(records, timings)


def _synthetic_config(args):
    cfg, _ = build_config(args)
    missing = [c for c in cfg.channels if c not in SYNTHETIC_CHANNELS]
    if missing:
        raise InputError(f"synthetic scenes have no channel(s): {', '.join(missing)}")
    return cfg


def cmd_bench(args):
    cfg = _synthetic_config(args)
    kind, value = _degradation_from_args(args)
    if kind is None:
        kind, levels = "none", [None]
    else:
        levels = parse_levels(value, args.step)
    if args.trials < 0:
        raise InputError("--trials must be >= 0")
    try:
        records = bench.run_benchmark(
            kind, levels, args.trials, cfg, cfg.seed, args.max_translation, args.axis, args.timings
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(_table(records, args, args.timings), args.out)


def cmd_sweep(args):
    cfg = _synthetic_config(args)
    try:
        Bs = [int(v) for v in parse_levels(args.btilde_list)]
        ns = [int(v) for v in parse_levels(args.nvox_list)]
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    try:
        records = bench.sweep_bandwidth(Bs, ns, args.trials, cfg, cfg.seed, args.max_translation, args.timings)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(_table(records, args, args.timings), args.out)


def cmd_eval(args):
    try:
        doc = json.loads(Path(args.result).read_text(encoding="utf-8"))
        q, t = doc["estimate"]["q"], doc["estimate"]["t"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read result {args.result}: {exc}") from exc
    truth = _truth_from_json(args.truth)
    rot, trans = evaluate((np.asarray(q), np.asarray(t)), truth)
    out = {"rot_deg": rot, "trans_m": trans}
    if args.format == "csv":
        _emit(_csv_one(out), args.out)
    else:
        _emit(json.dumps(out, indent=2) + "\n", args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="specreg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common_out(sp, default_format):
        sp.add_argument("--out", help="write to this file instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default=default_format)

    r = sub.add_parser("register", help="register SOURCE onto TARGET")
    r.add_argument("source")
    r.add_argument("target")
    r.add_argument("--truth", help="JSON with truth {q, t}; adds errors to the output")
    r.add_argument("--no-timings", action="store_true", help="omit stage timings")
    _add_cfg_flags(r)
    common_out(r, "json")
    r.set_defaults(func=cmd_register)

    s = sub.add_parser("synth", help="write a synthetic pair and its truth")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--points", type=int, default=5000)
    s.add_argument("--max-translation", type=float, default=1.0)
    s.add_argument("--psnr")
    s.add_argument("--sparsify")
    s.add_argument("--overlap")
    s.add_argument("--axis", default="x", choices=("x", "y", "z", "X", "Y", "Z"))
    s.add_argument("--cloud-format", choices=FORMATS, default="ply")
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="degradation sweep on synthetic pairs")
    b.add_argument("--psnr", help="PSNR levels in dB, e.g. 50,45,40")
    b.add_argument("--sparsify", help="fractions removed, e.g. 0.1..0.9")
    b.add_argument("--overlap", help="fractions kept, e.g. 0.1..1.0")
    b.add_argument("--step", type=float, help="step for a..b ranges")
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--axis", default="x", choices=("x", "y", "z", "X", "Y", "Z"))
    b.add_argument("--max-translation", type=float, default=1.0)
    b.add_argument("--timings", action="store_true", help="add stage timing columns")
    _add_cfg_flags(b)
    common_out(b, "csv")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("eval", help="errors of a result against a truth")
    e.add_argument("result", help="JSON written by 'register'")
    e.add_argument("--truth", required=True, help="JSON with truth {q, t}")
    common_out(e, "json")
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="error and runtime over bandwidths and grid sizes")
    w.add_argument("--btilde-list", default="16,32", help="spherical bandwidths")
    w.add_argument("--nvox-list", default="32,64", help="voxel grid sizes")
    w.add_argument("--trials", type=int, default=1)
    w.add_argument("--max-translation", type=float, default=1.0)
    w.add_argument("--timings", action="store_true", help="add stage timing columns")
    _add_cfg_flags(w)
    common_out(w, "csv")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except InputError as exc:
        print(f"specreg: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RegistrationFailure as exc:
        print(f"specreg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"specreg: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
