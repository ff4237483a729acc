"""Binary container for spectra and correlation grids (test fixtures).

Layout, all little-endian::

    offset  size  field
    0       4     magic b"SRGB"
    4       1     version (1)
    5       1     kind: 1 spherical spectrum, 2 spatial spectrum,
                        3 SO(3) correlation grid, 4 correlation volume
    6       2     reserved (0)
    8       4     dim: bandwidth B (kinds 1, 3) or edge length n (kinds 2, 4)
    12      4     K, number of channels (1 for grids)
    16      8     float64 aux: voxel size (kinds 2, 4), else 0
    24      4     uint32 pad factor (kinds 3, 4), else 0
    28      4     uint32 byte length L of the channel-name block
    32      L     UTF-8 channel names joined by "\\n"
    32+L    ...   complex64 payload, C order

Payload shapes: kind 1 ``(B^2, K)`` in degree-major order, kind 2
``(n, n, n, K)``, kind 3 ``(R, R, R)`` with ``R = 2 B pad``, kind 4
``(n pad,) * 3``. Grid magnitudes are stored as complex64 with zero imaginary
part so that every kind shares one payload type.
"""

from __future__ import annotations

import struct

import numpy as np

from .so3 import So3CorrelationGrid
from .sphere import SphericalSpectrum
from .volume import CorrelationVolume, SpatialSpectrum

MAGIC = b"SRGB"
VERSION = 1
SPHERICAL, SPATIAL, SO3_GRID, VOLUME = 1, 2, 3, 4

_HEADER = struct.Struct("<4sBBHIIdII")


class ContainerError(ValueError):
    pass


def _pack(kind, dim, K, aux, pad, names, payload):
    name_block = "\n".join(names).encode("utf-8")
    head = _HEADER.pack(MAGIC, VERSION, kind, 0, dim, K, aux, pad, len(name_block))
    data = np.ascontiguousarray(payload, dtype="<c8").tobytes()
    return head + name_block + data


def dumps(obj):
    """Serialize a spectrum or correlation grid to bytes."""
    if isinstance(obj, SphericalSpectrum):
        c = obj.coefficients
        return _pack(SPHERICAL, obj.bandwidth, c.shape[1], 0.0, 0, obj.channels, c)
    if isinstance(obj, SpatialSpectrum):
        return _pack(SPATIAL, obj.n, obj.n_channels, obj.voxel_size, 0, obj.channels, obj.coefficients)
    if isinstance(obj, So3CorrelationGrid):
        return _pack(SO3_GRID, obj.bandwidth, 1, 0.0, obj.pad_factor, (), obj.magnitudes)
    if isinstance(obj, CorrelationVolume):
        n = obj.n_padded // obj.pad_factor
        return _pack(VOLUME, n, 1, obj.voxel_size, obj.pad_factor, (), obj.magnitudes)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(buf):
    """Inverse of :func:`dumps`."""
    buf = bytes(buf)
    if len(buf) < _HEADER.size:
        raise ContainerError("truncated header")
    magic, version, kind, _, dim, K, aux, pad, L = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ContainerError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ContainerError(f"unsupported version {version}")
    start = _HEADER.size + L
    names = buf[_HEADER.size : start].decode("utf-8")
    names = tuple(names.split("\n")) if names else ()
    shapes = {
        SPHERICAL: (dim * dim, K),
        SPATIAL: (dim, dim, dim, K),
        SO3_GRID: (2 * dim * pad,) * 3,
        VOLUME: (dim * pad,) * 3,
    }
    if kind not in shapes:
        raise ContainerError(f"unknown kind {kind}")
    shape = shapes[kind]
    count = int(np.prod(shape))
    if len(buf) - start != count * 8:
        raise ContainerError(f"payload is {len(buf) - start} bytes, expected {count * 8}")
    data = np.frombuffer(buf, dtype="<c8", count=count, offset=start).reshape(shape)
    data = data.astype(np.complex128)
    if kind == SPHERICAL:
        return SphericalSpectrum(dim, data, names)
    if kind == SPATIAL:
        return SpatialSpectrum(data, aux, names)
    if kind == SO3_GRID:
        return So3CorrelationGrid(data.real.copy(), dim, pad)
    return CorrelationVolume(data.real.copy(), aux, pad)


def save(obj, path):
    with open(path, "wb") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
