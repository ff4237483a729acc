import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specreg import fusion, sphere
from specreg.volume import SpatialSpectrum


def _complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


class TestPyramid:
    @pytest.mark.parametrize("P", [2, 3, 4, 5])
    @pytest.mark.parametrize("shape", [(32, 32), (31, 63), (16, 16, 16), (17, 20, 16)])
    def test_perfect_reconstruction(self, rng, P, shape):
        x = _complex(rng, shape)
        np.testing.assert_allclose(fusion.reconstruct(fusion.build_pyramid(x, P)), x, rtol=0, atol=1e-10)

    @given(
        seed=st.integers(0, 2**32 - 1),
        dims=st.lists(st.integers(8, 24), min_size=2, max_size=3),
        P=st.integers(2, 4),
    )
    def test_reconstruction_property(self, seed, dims, P):
        x = _complex(np.random.default_rng(seed), tuple(dims))
        assert np.max(np.abs(fusion.reconstruct(fusion.build_pyramid(x, P)) - x)) < 1e-10

    def test_level_shapes_are_ceil_halves(self, rng):
        p = fusion.build_pyramid(_complex(rng, (33, 20, 17)), 4)
        for k, lev in enumerate(p.levels):
            assert lev.shape == tuple(-(-s // 2**k) for s in (33, 20, 17))
        assert p.n_levels == 4 and p.domain == "spatial-3d"
        assert fusion.build_pyramid(np.zeros((8, 8)), 2).domain == "spherical-2d"

    def test_zero(self):
        p = fusion.build_pyramid(np.zeros((16, 16, 16)), 3)
        assert all(not np.any(lev) for lev in p.levels)
        assert not np.any(fusion.reconstruct(p))

    def test_constant_has_empty_bands(self):
        c = 2.5 - 1.5j
        p = fusion.build_pyramid(np.full((32, 24), c), 4)
        for lev in p.levels[:-1]:
            assert np.max(np.abs(lev)) < 1e-10
        np.testing.assert_allclose(p.levels[-1], c, atol=1e-10)

    @pytest.mark.parametrize("shape,P", [((8, 8), 5), ((32, 7), 4), ((16, 16, 4), 4)])
    def test_axis_too_short(self, shape, P):
        with pytest.raises(ValueError):
            fusion.build_pyramid(np.zeros(shape), P)

    def test_single_level_rejected(self):
        with pytest.raises(ValueError):
            fusion.build_pyramid(np.zeros((8, 8)), 1)

    def test_max_levels(self):
        assert fusion.max_levels((16, 16)) == 5
        assert fusion.max_levels((32, 17)) == 5
        assert fusion.max_levels((3, 64)) == 2


class TestFuse:
    def test_single_channel_identity(self, rng):
        p = fusion.build_pyramid(_complex(rng, (16, 16)), 3)
        assert fusion.fuse([p]) is p

    def test_dominant_channel_wins(self, rng):
        x = _complex(rng, (32, 32))
        a, b = fusion.build_pyramid(x, 4), fusion.build_pyramid(10 * x, 4)
        f = fusion.fuse([a, b])
        for k in range(3):
            np.testing.assert_array_equal(f.levels[k], b.levels[k])
        np.testing.assert_allclose(f.levels[-1], 5.5 * a.levels[-1], atol=1e-12)

    def test_disjoint_supports(self, rng):
        # separate halves in the finest band, away from the seam
        x = np.zeros((32, 32), complex)
        y = np.zeros((32, 32), complex)
        x[:, :16] = _complex(rng, (32, 16))
        y[:, 16:] = _complex(rng, (32, 16))
        px, py = fusion.build_pyramid(x, 2), fusion.build_pyramid(y, 2)
        f = fusion.fuse([px, py])
        np.testing.assert_array_equal(f.levels[0][:, :12], px.levels[0][:, :12])
        np.testing.assert_array_equal(f.levels[0][:, 20:], py.levels[0][:, 20:])

    def test_identical_channels_reconstruct_original(self, rng):
        x = _complex(rng, (16, 16, 16))
        p = fusion.build_pyramid(x, 3)
        out = fusion.reconstruct(fusion.fuse([p, p, p]))
        np.testing.assert_allclose(out, x, atol=1e-10)

    def test_tie_goes_to_lowest_index(self):
        a = fusion.build_pyramid(np.ones((8, 8)) * (1 + 1j), 2)
        b = fusion.build_pyramid(np.ones((8, 8)) * (1 - 1j), 2)
        lev = np.ones((8, 8)) * (1 + 1j)
        a = fusion.SpectrumPyramid((lev, a.levels[1]), "spherical-2d")
        b = fusion.SpectrumPyramid((np.conj(lev), b.levels[1]), "spherical-2d")
        np.testing.assert_array_equal(fusion.fuse([a, b]).levels[0], lev)
        np.testing.assert_array_equal(fusion.fuse([b, a]).levels[0], np.conj(lev))

    @settings(max_examples=15)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_channel_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        ps = [fusion.build_pyramid(_complex(rng, (16, 16)) * s, 3) for s in (1.0, 2.0, 0.5)]
        f1 = fusion.reconstruct(fusion.fuse(ps))
        f2 = fusion.reconstruct(fusion.fuse(ps[::-1]))
        np.testing.assert_allclose(f1, f2, atol=1e-12)

    @settings(max_examples=15)
    @given(seed=st.integers(0, 2**32 - 1), K=st.integers(2, 4))
    def test_energy_bound(self, seed, K):
        rng = np.random.default_rng(seed)
        xs = [_complex(rng, (16, 16, 8)) * rng.uniform(0.1, 3) for _ in range(K)]
        ps = [fusion.build_pyramid(x, 3) for x in xs]
        fused = fusion.reconstruct(fusion.fuse(ps))
        top = np.linalg.norm(np.mean([p.levels[-1] for p in ps], axis=0))
        assert np.linalg.norm(fused) <= 2 * (max(np.linalg.norm(x) for x in xs) + top)

    def test_shape_mismatch(self, rng):
        a = fusion.build_pyramid(_complex(rng, (16, 16)), 3)
        with pytest.raises(ValueError):
            fusion.fuse([a, fusion.build_pyramid(_complex(rng, (16, 8)), 3)])
        with pytest.raises(ValueError):
            fusion.fuse([a, fusion.build_pyramid(_complex(rng, (16, 16)), 2)])
        with pytest.raises(ValueError):
            fusion.fuse([])


class TestDomains:
    def test_spherical_mask_and_single(self, rng):
        spec = sphere.random_spectrum(8, rng, n_channels=2)
        fused = fusion.fuse_spherical(spec, 3)
        assert fused.n_channels == 1 and fused.channels == ("fused",)
        rect = fused.to_rect()[..., 0]
        l = np.arange(8)[:, None]
        m = np.arange(15)[None, :] - 7
        assert not np.any(rect[np.abs(m) > l])
        one = sphere.random_spectrum(8, rng)
        assert fusion.fuse_spherical(one) is one

    def test_spherical_identical_channels(self, rng):
        one = sphere.random_spectrum(16, rng)
        c = one.coefficients
        two = sphere.SphericalSpectrum(16, np.concatenate([c, c], axis=1), ("a", "b"))
        np.testing.assert_allclose(fusion.fuse_spherical(two).coefficients[:, 0], c[:, 0], atol=1e-10)

    def test_spatial_identical_channels(self, rng):
        c = _complex(rng, (16, 16, 16, 1))
        spec = SpatialSpectrum(np.concatenate([c, c], axis=3), 0.5, ("a", "b"))
        out = fusion.fuse_spatial(spec)
        assert out.channels == ("fused",) and out.voxel_size == 0.5
        np.testing.assert_allclose(out.coefficients[..., 0], c[..., 0], atol=1e-10)

    def test_depth_reduced_with_warning(self, rng, caplog):
        xs = [_complex(rng, (8, 8)) for _ in range(2)]
        with caplog.at_level("WARNING", logger="specreg.fusion"):
            out = fusion.fuse_arrays(xs, levels=6)
        assert out.shape == (8, 8)
        assert "reduced" in caplog.text
