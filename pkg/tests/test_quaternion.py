import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from specreg import quaternion as quat

angles = st.floats(0.0, 2 * np.pi, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def _scipy_wxyz(r):
    x, y, z, w = r.as_quat()
    return np.array([w, x, y, z])


class TestMatrix:
    @given(seeds)
    def test_matches_scipy(self, seed):
        q = quat.random_uniform(np.random.default_rng(seed))
        R = Rotation.from_quat(np.r_[q[1:], q[0]]).as_matrix()
        np.testing.assert_allclose(quat.to_matrix(q), R, atol=1e-12)

    @given(seeds)
    def test_from_matrix_round_trip(self, seed):
        q = quat.random_uniform(np.random.default_rng(seed))
        back = quat.from_matrix(quat.to_matrix(q))
        assert quat.geodesic_distance(q, back) < 1e-7

    def test_quarter_turn_about_z(self):
        q = quat.from_axis_angle([0, 0, 1], np.pi / 2)
        np.testing.assert_allclose(quat.to_matrix(q) @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    @given(seeds, seeds)
    def test_multiply_composes_matrices(self, s1, s2):
        a = quat.random_uniform(np.random.default_rng(s1))
        b = quat.random_uniform(np.random.default_rng(s2))
        np.testing.assert_allclose(
            quat.to_matrix(quat.multiply(a, b)), quat.to_matrix(a) @ quat.to_matrix(b), atol=1e-12
        )


class TestZYZ:
    def test_alpha_only(self):
        q = quat.from_zyz(np.pi / 2, 0.0, 0.0)
        np.testing.assert_allclose(q, [np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)], atol=1e-12)

    @given(angles, st.floats(0.0, np.pi), angles)
    def test_matches_scipy_intrinsic_zyz(self, a, b, g):
        ref = _scipy_wxyz(Rotation.from_euler("ZYZ", [a, b, g]))
        assert quat.geodesic_distance(quat.from_zyz(a, b, g), ref) < 1e-7

    @given(seeds)
    def test_round_trip(self, seed):
        q = quat.random_uniform(np.random.default_rng(seed))
        back = quat.from_zyz(*quat.to_zyz(q))
        assert quat.geodesic_distance(q, back) < 1e-6

    @pytest.mark.parametrize("beta", [0.0, np.pi])
    def test_gimbal_lock(self, beta):
        q = quat.from_zyz(0.7, beta, 0.2)
        assert quat.geodesic_distance(quat.from_zyz(*quat.to_zyz(q)), q) < 1e-7


class TestMisc:
    def test_canonical_sign(self):
        np.testing.assert_array_equal(quat.canonical([-1.0, 0, 0, 0]), [1.0, 0, 0, 0])
        np.testing.assert_array_equal(quat.canonical([0.0, -1.0, 0, 0]), [0.0, 1.0, 0, 0])
        np.testing.assert_array_equal(quat.canonical([0.0, 0, 0, -1.0]), [0.0, 0, 0, 1.0])

    def test_geodesic_double_cover(self):
        q = quat.from_axis_angle([1, 2, 3], 0.4)
        assert quat.geodesic_distance(q, -q) == pytest.approx(0.0, abs=1e-7)

    def test_geodesic_quarter_turn(self):
        q = quat.from_axis_angle([0, 0, 1], np.pi / 2)
        assert np.degrees(quat.geodesic_distance(q, [1, 0, 0, 0])) == pytest.approx(90.0)

    @pytest.mark.parametrize("angle", [1e-12, 1e-9, 1e-6, 3.0])
    def test_geodesic_precision(self, angle):
        q = quat.from_axis_angle([1, -2, 0.5], angle)
        assert quat.geodesic_distance(q, [1, 0, 0, 0]) == pytest.approx(angle, rel=1e-9)
        assert quat.geodesic_distance(-q, [1, 0, 0, 0]) == pytest.approx(angle, rel=1e-9)

    def test_random_uniform_is_unit(self, rng):
        q = quat.random_uniform(rng, 1000)
        np.testing.assert_allclose(np.linalg.norm(q, axis=1), 1.0, atol=1e-12)
        # the rotation angle of a uniform rotation has mean pi/2 + 2/pi
        ang = 2 * np.arccos(np.abs(q[:, 0]))
        assert abs(ang.mean() - (np.pi / 2 + 2 / np.pi)) < 0.05
