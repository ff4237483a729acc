import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import smooth_phantom
from specreg import volume
from specreg.cloud import PointCloud


def _vol(values, fov=8.0):
    return volume.VolumetricFunction(values, fov)


def _estimate(F, H, pad):
    c = volume.phase_correlate(F, H, pad)
    T, _ = volume.extract_translation_samples(c, 1)
    return T[0], c


class TestVoxelize:
    def test_single_point_near_origin(self):
        c = PointCloud([[1e-3, 1e-3, 1e-3]], {"v": [5.0]})
        v = volume.voxelize(c, 8, 8.0, ("v",))
        assert np.count_nonzero(v.values) == 1
        assert v.values[4, 4, 4, 0] == 5.0

    def test_average(self):
        c = PointCloud([[0.1, 0.1, 0.1], [0.2, 0.2, 0.2]], {"v": [2.0, 4.0]})
        assert volume.voxelize(c, 8, 8.0, ("v",)).values[4, 4, 4, 0] == 3.0

    def test_out_of_cube(self):
        c = PointCloud([[4.0 + 1e-9, 0, 0], [0.5, 0.5, 0.5]])
        v = volume.voxelize(c, 8, 8.0)
        assert v.out_of_cube == 1

    def test_all_outside(self):
        with pytest.raises(ValueError):
            volume.voxelize(PointCloud([[10.0, 0, 0]]), 8, 8.0)

    @pytest.mark.parametrize("n", [7, 6, 9])
    def test_bad_n(self, n):
        with pytest.raises(ValueError):
            volume.voxelize(PointCloud([[1.0, 0, 0]]), n, 8.0)

    def test_occupied_at_most_points(self, rng):
        c = PointCloud(rng.uniform(-3, 3, (200, 3)))
        v = volume.voxelize(c, 16, 8.0)
        assert np.count_nonzero(v.values) <= 200

    def test_voxel_size(self):
        assert _vol(np.zeros((8, 8, 8)), 4.0).voxel_size == 0.5

    def test_auto_fov(self):
        assert volume.auto_fov(PointCloud([[3.2, 0, 0], [0, 1, 0]])) == 7.0


class TestFFT:
    def test_constant(self):
        F = volume.fft3(_vol(np.full((8, 8, 8), 2.5)))
        assert F.coefficients[0, 0, 0, 0] == pytest.approx(2.5)
        c = F.coefficients.copy()
        c[0, 0, 0] = 0
        assert np.abs(c).max() < 1e-12

    def test_delta(self):
        v = np.zeros((8, 8, 8))
        v[0, 0, 0] = 1.0
        np.testing.assert_allclose(np.abs(volume.fft3(_vol(v)).coefficients), 1 / 512, atol=1e-15)

    def test_brute_force_oracle(self, rng):
        n = 8
        v = rng.normal(size=(n, n, n))
        x = np.arange(n)
        E = np.exp(-2j * np.pi * np.outer(x, x) / n)
        ref = np.einsum("ua,vb,wc,abc->uvw", E, E, E, v) / n**3
        np.testing.assert_allclose(volume.fft3(_vol(v)).coefficients[..., 0], ref, atol=1e-9)

    def test_round_trip_and_parseval(self, rng):
        v = rng.normal(size=(16, 16, 16))
        F = volume.fft3(_vol(v))
        np.testing.assert_allclose(volume.ifft3(F)[..., 0], v, rtol=1e-9, atol=1e-12)
        # with 1/n^3 forward scaling, sum |v|^2 = n^3 sum |F|^2
        assert np.sum(v**2) == pytest.approx(16**3 * np.sum(np.abs(F.coefficients) ** 2), rel=1e-6)

    def test_conjugate_symmetry(self, rng):
        n = 8
        c = volume.fft3(_vol(rng.normal(size=(n, n, n)))).coefficients[..., 0]
        neg = -np.arange(n) % n
        np.testing.assert_allclose(c[np.ix_(neg, neg, neg)], np.conj(c), atol=1e-12)


class TestPhaseCorrelation:
    def test_autocorrelation(self, rng):
        F = volume.fft3(_vol(rng.random((16, 16, 16))))
        t, _ = _estimate(F, F, 2)
        np.testing.assert_array_equal(t, 0.0)

    def test_shift_matches_brute_force(self, rng):
        n = 16
        h = rng.random((n, n, n))
        f = np.roll(h, 2, axis=0)
        t, c = _estimate(volume.fft3(_vol(f)), volume.fft3(_vol(h)), 1)
        np.testing.assert_allclose(t, [2 * 0.5, 0, 0])
        # circular cross-correlation oracle: c[s] = sum_x f[x + s] h[x]
        ref = np.array(
            [np.sum(np.roll(f, -s, axis=0) * h) for s in range(n)]
        ) / n**3
        np.testing.assert_allclose(c.magnitudes[:, 0, 0], np.abs(ref), rtol=1e-9)

    @settings(max_examples=20)
    @given(st.tuples(*[st.integers(-15, 15)] * 3), st.integers(0, 2**32 - 1))
    def test_integer_shift_exact(self, s, seed):
        n = 64
        rng = np.random.default_rng(seed)
        h = np.zeros((n, n, n))
        idx = rng.integers(0, n, (300, 3))
        h[tuple(idx.T)] = rng.random(300)
        f = np.roll(h, s, axis=(0, 1, 2))
        t, c = _estimate(volume.fft3(_vol(f, 64.0)), volume.fft3(_vol(h, 64.0)), 1)
        np.testing.assert_array_equal(t, np.array(s, dtype=float))

    def test_subvoxel_shift(self):
        n = 32
        shift = np.array([0.5, -1.5, 2.5])
        f = smooth_phantom(n, np.random.default_rng(0), shift=shift)
        h = smooth_phantom(n, np.random.default_rng(0))
        t, _ = _estimate(volume.fft3(_vol(f, n)), volume.fft3(_vol(h, n)), 2)
        assert np.abs(t - shift).max() <= 0.5

    def test_antisymmetric(self, rng):
        n = 32
        F = volume.fft3(_vol(smooth_phantom(n, np.random.default_rng(3), shift=(1.3, 0.2, -2.7)), n))
        H = volume.fft3(_vol(smooth_phantom(n, np.random.default_rng(3)), n))
        a, c = _estimate(F, H, 2)
        b, _ = _estimate(H, F, 2)
        assert np.abs(a + b).max() <= c.step + 1e-12

    def test_size_mismatch(self, rng):
        with pytest.raises(ValueError):
            volume.phase_correlate(
                volume.fft3(_vol(np.ones((8, 8, 8)))), volume.fft3(_vol(np.ones((16, 16, 16))))
            )


class TestDisplacementMap:
    def test_wrap(self):
        c = volume.CorrelationVolume(np.zeros((8, 8, 8)), 0.5, 1)
        assert c.displacement(7) == pytest.approx(-0.5)
        assert c.displacement(4) == pytest.approx(2.0)
        assert c.displacement(3) == pytest.approx(1.5)

    def test_involution(self):
        c = volume.CorrelationVolume(np.zeros((16, 16, 16)), 1.0, 2)
        i = np.arange(16)
        neg = (-i) % 16
        # negating the index negates the shift except at the Nyquist index
        ok = i != 8
        np.testing.assert_array_equal(c.shift_index(neg)[ok], -c.shift_index(i)[ok])

    def test_delta_at_zero(self):
        m = np.zeros((8, 8, 8))
        m[0, 0, 0] = 1.0
        T, w = volume.extract_translation_samples(volume.CorrelationVolume(m, 1.0, 1), 4)
        np.testing.assert_array_equal(T, [[0, 0, 0]])
        np.testing.assert_array_equal(w, [1.0])

    def test_peak_at_last_index(self):
        m = np.zeros((8, 8, 8))
        m[7, 0, 0] = 1.0
        T, _ = volume.extract_translation_samples(volume.CorrelationVolume(m, 0.25, 1), 1)
        np.testing.assert_allclose(T[0], [-0.25, 0, 0])

    def test_tie_break(self):
        m = np.zeros((8, 8, 8))
        m[1, 1, 1] = m[5, 5, 5] = 1.0
        T, _ = volume.extract_translation_samples(volume.CorrelationVolume(m, 1.0, 1), 1)
        np.testing.assert_array_equal(T[0], [1, 1, 1])

    def test_all_zero(self):
        with pytest.raises(ValueError):
            volume.extract_translation_samples(volume.CorrelationVolume(np.zeros((8, 8, 8)), 1.0, 1))
