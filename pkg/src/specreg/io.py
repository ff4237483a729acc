"""Reading and writing point clouds as PLY, PCD (ASCII v0.7) and CSV."""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path

import numpy as np

from .cloud import PointCloud

log = logging.getLogger(__name__)

FORMATS = ("ply", "pcd", "csv")

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class CloudFormatError(ValueError):
    """Malformed cloud file; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


def _finish(points, channels, source):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    channels = {k: np.asarray(v, dtype=np.float64) for k, v in channels.items()}
    for name, v in channels.items():
        if v.shape[0] != points.shape[0]:
            raise CloudFormatError(f"channel {name!r} length mismatch")
    bad = ~np.all(np.isfinite(points), axis=1)
    zero = np.all(points == 0.0, axis=1)
    drop = zero | bad
    n_drop = int(drop.sum())
    if n_drop:
        log.warning("%s: dropped %d zero-norm or non-finite points", source, n_drop)
    keep = ~drop
    return PointCloud(
        points[keep],
        {k: v[keep] for k, v in channels.items()},
        frame_id=str(source),
        dropped_count=n_drop,
    )


def load_cloud(path, format=None):
    """Load a cloud; zero-norm points are dropped and counted in ``dropped_count``.

    ``format`` is one of ``"ply"``, ``"pcd"``, ``"csv"``; by default it is taken
    from the file suffix.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise ValueError(f"unknown cloud format {fmt!r}")
    data = path.read_bytes()
    if fmt == "ply":
        pts, chans = _parse_ply(data)
    elif fmt == "pcd":
        pts, chans = _parse_pcd(data)
    else:
        pts, chans = _parse_csv(data)
    return _finish(pts, chans, path)


def save_cloud(cloud, path, format=None, binary=False):
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    names = cloud.channel_names
    cols = np.column_stack([cloud.points] + [cloud.channels[n] for n in names]) if len(cloud) else np.zeros((0, 3 + len(names)))
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", *names])
            for row in cols:
                w.writerow([repr(float(v)) for v in row])
    elif fmt == "ply":
        header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
                  f"element vertex {len(cloud)}"]
        header += [f"property double {n}" for n in ("x", "y", "z", *names)]
        header.append("end_header")
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            if binary:
                fh.write(cols.astype("<f8").tobytes())
            else:
                for row in cols:
                    fh.write((" ".join(repr(float(v)) for v in row) + "\n").encode("ascii"))
    elif fmt == "pcd":
        fields = ["x", "y", "z", *names]
        header = [
            "# .PCD v0.7 - Point Cloud Data file format",
            "VERSION 0.7",
            "FIELDS " + " ".join(fields),
            "SIZE " + " ".join("8" for _ in fields),
            "TYPE " + " ".join("F" for _ in fields),
            "COUNT " + " ".join("1" for _ in fields),
            f"WIDTH {len(cloud)}",
            "HEIGHT 1",
            "VIEWPOINT 0 0 0 1 0 0 0",
            f"POINTS {len(cloud)}",
            "DATA ascii",
        ]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(header) + "\n")
            for row in cols:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unknown cloud format {fmt!r}")


def _split_columns(names, table):
    lower = [n.lower() for n in names]
    try:
        ix = [lower.index(a) for a in ("x", "y", "z")]
    except ValueError:
        raise CloudFormatError("missing x/y/z columns", 0) from None
    pts = table[:, ix]
    chans = {names[i]: table[:, i] for i in range(len(names)) if i not in ix}
    return pts, chans


def _parse_csv(data):
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CloudFormatError("empty CSV file", 0) from None
    if len(header) < 3:
        raise CloudFormatError("CSV header needs at least x,y,z", 0)
    rows = []
    offset = len(text.splitlines(keepends=True)[0].encode("utf-8"))
    for line in text.splitlines(keepends=True)[1:]:
        if line.strip():
            fields = line.strip().split(",")
            if len(fields) != len(header):
                raise CloudFormatError(
                    f"expected {len(header)} fields, got {len(fields)}", offset
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise CloudFormatError(f"non-numeric field in row {line.strip()!r}", offset) from None
        offset += len(line.encode("utf-8"))
    table = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return _split_columns(header, table)


def _read_header(data, terminator):
    """Return (header lines, byte offset of the payload)."""
    end = data.find(terminator)
    if end < 0:
        raise CloudFormatError(f"header terminator {terminator!r} not found", len(data))
    nl = data.find(b"\n", end)
    body = len(data) if nl < 0 else nl + 1
    try:
        lines = data[:body].decode("ascii").splitlines()
    except UnicodeDecodeError as exc:
        raise CloudFormatError("non-ASCII bytes in header", exc.start) from None
    return lines, body


def _parse_ply(data):
    if not data.startswith(b"ply"):
        raise CloudFormatError("missing 'ply' magic", 0)
    lines, body = _read_header(data, b"end_header")
    fmt = None
    elements = []  # (name, count, [(prop, dtype)])
    offset = 0
    for line in lines:
        tok = line.split()
        if not tok or tok[0] in ("ply", "comment", "obj_info", "end_header"):
            pass
        elif tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise CloudFormatError("property before element", offset)
            if tok[1] == "list":
                raise CloudFormatError("list properties are not supported", offset)
            if tok[1] not in _PLY_TYPES:
                raise CloudFormatError(f"unknown property type {tok[1]!r}", offset)
            elements[-1][2].append((tok[2], _PLY_TYPES[tok[1]]))
        else:
            raise CloudFormatError(f"unexpected header line {line!r}", offset)
        offset += len(line) + 1
    if fmt not in ("ascii", "binary_little_endian"):
        raise CloudFormatError(f"unsupported PLY format {fmt!r}", 0)
    if not elements or elements[0][0] != "vertex":
        raise CloudFormatError("first element must be 'vertex'", 0)
    _, count, props = elements[0]
    names = [p for p, _ in props]
    if fmt == "ascii":
        text = data[body:].decode("ascii", errors="replace").splitlines()
        rows = [r for r in text if r.strip()][:count]
        if len(rows) < count:
            raise CloudFormatError(f"expected {count} vertices, found {len(rows)}", len(data))
        try:
            table = np.array([[float(v) for v in r.split()[: len(props)]] for r in rows])
        except ValueError:
            raise CloudFormatError("non-numeric vertex data", body) from None
        table = table.reshape(count, len(props))
    else:
        dt = np.dtype([(p, "<" + t) for p, t in props])
        need = body + dt.itemsize * count
        if len(data) < need:
            raise CloudFormatError(f"truncated binary payload, need {need} bytes", len(data))
        rec = np.frombuffer(data, dtype=dt, count=count, offset=body)
        table = np.column_stack([rec[p].astype(np.float64) for p in names]) if count else np.zeros((0, len(names)))
    return _split_columns(names, table)


def _parse_pcd(data):
    lines, body = _read_header(data, b"DATA")
    head = {}
    offset = 0
    for line in lines:
        tok = line.split()
        if tok and not tok[0].startswith("#"):
            head[tok[0].upper()] = tok[1:]
        offset += len(line) + 1
    if head.get("VERSION", ["0.7"])[0] not in ("0.7", ".7"):
        raise CloudFormatError(f"unsupported PCD version {head['VERSION'][0]}", 0)
    if head.get("DATA", [None])[0] != "ascii":
        raise CloudFormatError("only 'DATA ascii' PCD files are supported", body)
    fields = head.get("FIELDS")
    if not fields:
        raise CloudFormatError("missing FIELDS", 0)
    counts = [int(c) for c in head.get("COUNT", ["1"] * len(fields))]
    if any(c != 1 for c in counts):
        raise CloudFormatError("multi-count fields are not supported", 0)
    n = int(head.get("POINTS", head.get("WIDTH", ["0"]))[0])
    rows = [r for r in data[body:].decode("ascii", errors="replace").splitlines() if r.strip()]
    if len(rows) != n:
        raise CloudFormatError(f"expected {n} points, found {len(rows)}", body)
    try:
        table = np.array([[float(v) for v in r.split()] for r in rows], dtype=np.float64)
    except ValueError:
        raise CloudFormatError("non-numeric point data", body) from None
    if n and table.shape[1] != len(fields):
        raise CloudFormatError("field count mismatch in data", body)
    return _split_columns(fields, table.reshape(n, len(fields)))

