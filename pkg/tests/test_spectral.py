import numpy as np
import pytest

from fl_emph.errors import DomainError, InputError
from fl_emph.spectral import TimeSeries, batch_fourier_amplitudes, check_modes, fourier_amplitudes


def _grid(n):
    return 2 * np.pi * np.arange(n) / n


def test_unit_cosine_has_unit_radius():
    t = _grid(36)
    radii = fourier_amplitudes(TimeSeries(np.cos(t)), [1, 5])
    np.testing.assert_allclose(radii.radii, [1.0, 0.0], atol=1e-12)
    assert radii.N == 2


def test_radius_ignores_phase():
    t = _grid(36)
    a = fourier_amplitudes(TimeSeries(np.cos(t + 0.3)), [1])
    b = fourier_amplitudes(TimeSeries(3 * np.sin(2 * t)), [2])
    np.testing.assert_allclose(a.radii, [1.0], atol=1e-12)
    np.testing.assert_allclose(b.radii, [3.0], atol=1e-12)


def test_nyquist_mode_doubles():
    t = _grid(8)
    radii = fourier_amplitudes(TimeSeries(np.cos(4 * t)), [4])
    np.testing.assert_allclose(radii.radii, [2.0], atol=1e-12)


def test_plain_arrays_are_accepted():
    radii = fourier_amplitudes(np.cos(_grid(10)), [1])
    np.testing.assert_allclose(radii.radii, [1.0], atol=1e-12)


@pytest.mark.parametrize("modes", [[0], [19], [1, 19]])
def test_mode_out_of_range(modes):
    with pytest.raises(DomainError):
        check_modes(modes, 36)


@pytest.mark.parametrize("modes", [[], [5, 1], [2, 2]])
def test_bad_mode_lists(modes):
    with pytest.raises(InputError):
        check_modes(modes, 36)


def test_time_series_validation():
    with pytest.raises(InputError):
        TimeSeries(np.array([1.0]))
    with pytest.raises(InputError):
        TimeSeries(np.array([1.0, np.nan, 2.0]))
    with pytest.raises(InputError):
        TimeSeries(np.ones((2, 3)))


def test_batch_matches_single(rng):
    samples = rng.standard_normal((5, 20))
    batch = batch_fourier_amplitudes(samples, [1, 3, 10])
    for row, radii in zip(samples, batch):
        np.testing.assert_allclose(fourier_amplitudes(TimeSeries(row), [1, 3, 10]).radii, radii)


def test_two_mode_signal():
    t = _grid(36)
    radii = fourier_amplitudes(TimeSeries(np.cos(t) + 0.5 * np.cos(2 * t)), [1, 2])
    np.testing.assert_allclose(radii.radii, [1.0, 0.5], atol=1e-12)


def test_constant_series_has_zero_radii():
    radii = fourier_amplitudes(TimeSeries(np.full(36, 3.0)), [1, 2])
    np.testing.assert_allclose(radii.radii, [0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("scale", [-2.5, 0.0, 0.3, 7.0])
def test_radii_scale_linearly(rng, scale):
    x = rng.standard_normal(40)
    base = fourier_amplitudes(TimeSeries(x), [1, 4, 9]).radii
    scaled = fourier_amplitudes(TimeSeries(scale * x), [1, 4, 9]).radii
    np.testing.assert_allclose(scaled, abs(scale) * base, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_radii_are_bounded_by_the_signal_energy(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(30)
    radii = fourier_amplitudes(TimeSeries(x), list(range(1, 15))).radii
    assert 0.5 * np.sum(radii**2) <= np.mean(x**2) + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_synthesized_signal_gives_back_its_radii(seed):
    rng = np.random.default_rng(seed)
    modes = [1, 3, 4, 7]
    radii = rng.uniform(0.0, 3.0, len(modes))
    phases = rng.uniform(0.0, 2 * np.pi, len(modes))
    t = _grid(32)
    x = sum(r * np.cos(k * t + phi) for r, k, phi in zip(radii, modes, phases))
    np.testing.assert_allclose(fourier_amplitudes(TimeSeries(x), modes).radii, radii, atol=1e-8)
