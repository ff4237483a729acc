import numpy as np
import pytest

from specreg import container, sphere
from specreg.so3 import So3CorrelationGrid
from specreg.volume import CorrelationVolume, SpatialSpectrum


def _c64(x):
    return x.astype(np.complex64).astype(np.complex128)


def test_spherical_round_trip(rng, tmp_path):
    spec = sphere.random_spectrum(6, rng, n_channels=2)
    spec = sphere.SphericalSpectrum(6, spec.coefficients, ("range", "intensité"))
    path = tmp_path / "s.bin"
    container.save(spec, path)
    back = container.load(path)
    assert back.bandwidth == 6 and back.channels == ("range", "intensité")
    np.testing.assert_array_equal(back.coefficients, _c64(spec.coefficients))


def test_spatial_round_trip(rng):
    c = rng.normal(size=(8, 8, 8, 1)) + 1j * rng.normal(size=(8, 8, 8, 1))
    back = container.loads(container.dumps(SpatialSpectrum(c, 0.25, ("range",))))
    assert back.voxel_size == 0.25 and back.channels == ("range",)
    np.testing.assert_array_equal(back.coefficients, _c64(c))


def test_grid_round_trips(rng):
    g = So3CorrelationGrid(rng.random((8, 8, 8)), 2, 2)
    back = container.loads(container.dumps(g))
    assert (back.bandwidth, back.pad_factor) == (2, 2)
    np.testing.assert_allclose(back.magnitudes, g.magnitudes, rtol=1e-7)
    v = CorrelationVolume(rng.random((16, 16, 16)), 0.5, 2)
    back = container.loads(container.dumps(v))
    assert back.voxel_size == 0.5 and back.n_padded == 16
    np.testing.assert_allclose(back.magnitudes, v.magnitudes, rtol=1e-7)


def test_header_layout(rng):
    buf = container.dumps(CorrelationVolume(np.zeros((8, 8, 8)), 1.5, 2))
    assert buf[:4] == b"SRGB" and buf[4] == 1 and buf[5] == container.VOLUME
    assert len(buf) == 32 + 8 * 512


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:4] + b"\x02" + b[5:],
        lambda b: b[:5] + b"\x09" + b[6:],
        lambda b: b[:-8],
        lambda b: b[:10],
    ],
)
def test_rejects_corruption(mutate):
    buf = container.dumps(CorrelationVolume(np.zeros((8, 8, 8)), 1.0, 2))
    with pytest.raises(container.ContainerError):
        container.loads(mutate(buf))


def test_rejects_other_types():
    with pytest.raises(TypeError):
        container.dumps(np.zeros(3))
