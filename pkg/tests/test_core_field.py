import numpy as np
import pytest

from nlse_lab.core_field import (
    GridMismatchError,
    NonFiniteFieldError,
    WaveField,
    energy,
    make_grid,
    mass,
    second_derivative,
    spectral_mass,
    spectral_resample,
    spectral_shift,
    sup_distance,
)


def test_grid_points_and_spacing():
    g = make_grid(16, 2 * np.pi)
    assert g.dx == pytest.approx(2 * np.pi / 16)
    assert g.x[0] == pytest.approx(-np.pi)
    assert g.x.size == 16
    assert np.all(np.diff(g.x) > 0)


@pytest.mark.parametrize("n,length", [(15, 1.0), (8, 1.0), (100, 1.0), (64, 0.0), (64, -2.0)])
def test_grid_rejects_bad_sizes(n, length):
    with pytest.raises(ValueError):
        make_grid(n, length)


def test_wavenumbers_fft_order():
    g = make_grid(16, 2 * np.pi)
    assert g.k[1] == pytest.approx(1.0)
    assert g.k[-1] == pytest.approx(-1.0)
    assert g.k_odd[8] == 0.0


def test_second_derivative_fourier_mode():
    g = make_grid(64, 2 * np.pi)
    u = WaveField(g, np.exp(3j * g.x))
    d2 = second_derivative(u)
    assert np.max(np.abs(d2.values + 9 * u.values)) < 1e-10


def _sech_d2_error(n, length):
    g = make_grid(n, length)
    s = 1 / np.cosh(g.x)
    d2 = second_derivative(WaveField(g, s))
    return np.max(np.abs(d2.values - (s - 2 * s ** 3)))


def test_second_derivative_sech_length_40():
    # sech(20) ~ 4e-9 is not negligible for a periodic derivative: the
    # wrap-around kink limits this case to ~3e-7
    assert _sech_d2_error(1024, 40.0) < 1e-10


def test_second_derivative_sech_wide_box():
    assert _sech_d2_error(2048, 80.0) < 1e-10


def test_soliton_mass_and_energy():
    g = make_grid(1024, 40.0)
    for a in (1.0, 1.5):
        u = WaveField(g, np.sqrt(2) * a / np.cosh(a * g.x))
        assert mass(u) == pytest.approx(4 * a, rel=1e-12)
        # E = int |U_x|^2 - |U|^4 / 2 = -4 a^3 / 3
        assert energy(u) == pytest.approx(-4 * a ** 3 / 3, rel=1e-10)


def test_parseval():
    g = make_grid(256, 20.0)
    rng = np.random.default_rng(3)
    u = WaveField(g, np.exp(-g.x ** 2) * (rng.standard_normal(256) + 1j * rng.standard_normal(256)))
    assert spectral_mass(u) == pytest.approx(mass(u), rel=1e-12)


def test_value_semantics():
    g = make_grid(32, 4.0)
    arr = np.ones(32, dtype=complex)
    u = WaveField(g, arr)
    arr[0] = 5.0
    assert u.values[0] == 1.0
    with pytest.raises(ValueError):
        u.values[0] = 2.0
    v = u + u
    assert u.values[0] == 1.0 and v.values[0] == 2.0


def test_non_finite_rejected():
    g = make_grid(32, 4.0)
    bad = np.zeros(32, dtype=complex)
    bad[3] = np.nan
    with pytest.raises(NonFiniteFieldError):
        WaveField(g, bad)


def test_grid_mismatch():
    a = WaveField.zeros(make_grid(32, 4.0))
    b = WaveField.zeros(make_grid(32, 8.0))
    with pytest.raises(GridMismatchError):
        sup_distance(a, b)
    assert sup_distance(a, a) == 0.0


def test_resample_and_shift():
    g = make_grid(128, 20.0)
    u = np.exp(-g.x ** 2)
    fine = spectral_resample(u, 256)
    g2 = make_grid(256, 20.0)
    assert np.max(np.abs(fine - np.exp(-g2.x ** 2))) < 1e-12
    moved = spectral_shift(u, g, 0.3)
    assert np.max(np.abs(moved - np.exp(-(g.x + 0.3) ** 2))) < 1e-12
