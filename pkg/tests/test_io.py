import struct

import numpy as np
import pytest

from specreg.cloud import RANGE, PointCloud
from specreg.io import CloudFormatError, load_cloud, save_cloud


def _write(tmp_path, name, data):
    p = tmp_path / name
    p.write_bytes(data if isinstance(data, bytes) else data.encode())
    return p


class TestCSV:
    def test_basic(self, tmp_path):
        p = _write(tmp_path, "a.csv", "x,y,z,intensity\n1,2,3,0.5\n4,5,6,0.7\n7,8,9,0.1\n")
        c = load_cloud(p)
        assert len(c) == 3 and c.channel_names == ["intensity"]
        np.testing.assert_array_equal(c.channels["intensity"], [0.5, 0.7, 0.1])

    def test_zero_point_dropped(self, tmp_path):
        p = _write(tmp_path, "a.csv", "x,y,z,intensity\n0,0,0,5\n1,0,0,2\n")
        c = load_cloud(p)
        assert len(c) == 1 and c.dropped_count == 1

    def test_columns_by_name(self, tmp_path):
        p = _write(tmp_path, "a.csv", "intensity,z,y,x\n5,3,2,1\n")
        c = load_cloud(p)
        np.testing.assert_array_equal(c.points, [[1, 2, 3]])

    def test_bad_row_reports_offset(self, tmp_path):
        p = _write(tmp_path, "a.csv", "x,y,z\n1,2,3\n1,2\n")
        with pytest.raises(CloudFormatError) as e:
            load_cloud(p)
        assert e.value.offset == len("x,y,z\n1,2,3\n")

    def test_missing_xyz(self, tmp_path):
        with pytest.raises(CloudFormatError):
            load_cloud(_write(tmp_path, "a.csv", "a,b,c\n1,2,3\n"))


class TestPLY:
    def test_ascii_xyz_only(self, tmp_path):
        text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 0 0\n0 2 0\n"
        c = load_cloud(_write(tmp_path, "a.ply", text))
        assert c.channel_names == []
        np.testing.assert_allclose(c.channel(RANGE), [1, 2])

    def test_binary_float32(self, tmp_path):
        head = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar intensity\nend_header\n"
        body = struct.pack("<fffB", 1, 2, 3, 7) + struct.pack("<fffB", 0, 0, 0, 9)
        c = load_cloud(_write(tmp_path, "a.ply", head + body))
        assert len(c) == 1 and c.dropped_count == 1
        np.testing.assert_array_equal(c.channels["intensity"], [7])

    def test_truncated_binary(self, tmp_path):
        head = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nend_header\n"
        with pytest.raises(CloudFormatError) as e:
            load_cloud(_write(tmp_path, "a.ply", head + b"\x00" * 30))
        assert e.value.offset == len(head) + 30

    def test_bad_magic(self, tmp_path):
        with pytest.raises(CloudFormatError):
            load_cloud(_write(tmp_path, "a.ply", "plx\n"))

    def test_big_endian_rejected(self, tmp_path):
        text = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n"
        with pytest.raises(CloudFormatError):
            load_cloud(_write(tmp_path, "a.ply", text))


class TestPCD:
    def test_ascii(self, tmp_path):
        text = "VERSION 0.7\nFIELDS x y z intensity\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\nWIDTH 2\nHEIGHT 1\nPOINTS 2\nDATA ascii\n1 2 3 4\n5 6 7 8\n"
        c = load_cloud(_write(tmp_path, "a.pcd", text))
        np.testing.assert_array_equal(c.channels["intensity"], [4, 8])

    def test_binary_rejected(self, tmp_path):
        text = "VERSION 0.7\nFIELDS x y z\nPOINTS 0\nDATA binary\n"
        with pytest.raises(CloudFormatError):
            load_cloud(_write(tmp_path, "a.pcd", text))

    def test_point_count_mismatch(self, tmp_path):
        text = "VERSION 0.7\nFIELDS x y z\nPOINTS 2\nDATA ascii\n1 2 3\n"
        with pytest.raises(CloudFormatError):
            load_cloud(_write(tmp_path, "a.pcd", text))


@pytest.mark.parametrize("fmt, binary", [("csv", False), ("ply", False), ("ply", True), ("pcd", False)])
def test_round_trip(tmp_path, fmt, binary):
    rng = np.random.default_rng(0)
    c = PointCloud(rng.normal(size=(50, 3)), {"intensity": rng.random(50), "ring": rng.integers(0, 16, 50)})
    path = tmp_path / f"c.{fmt}"
    save_cloud(c, path, binary=binary)
    back = load_cloud(path)
    np.testing.assert_array_equal(back.points, c.points)
    for k in c.channels:
        np.testing.assert_array_equal(back.channels[k], c.channels[k])


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        load_cloud(_write(tmp_path, "a.xyz", "1 2 3"))
