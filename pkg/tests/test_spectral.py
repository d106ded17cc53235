import math

import numpy as np
import pytest

from infra.errors import DomainError
from numerics.spectral import dft_samples, dft_times, parseval_check, uniform_step


def test_gaussian_transform_matches_continuous_result() -> None:
    sigma = 0.5
    dt = 0.01
    t = np.arange(-2000, 2000) * dt
    samples = np.exp(-0.5 * (t / sigma) ** 2)
    spectrum = dft_samples(samples, dt, float(t[0]))
    expected = sigma * np.exp(-0.5 * (sigma * spectrum.frequencies) ** 2)
    np.testing.assert_allclose(spectrum.amplitudes.real, expected, atol=1e-10)
    np.testing.assert_allclose(spectrum.amplitudes.imag, 0.0, atol=1e-10)


def test_shifted_impulse_gets_positive_phase_convention() -> None:
    dt = 0.1
    samples = np.zeros(64)
    samples[10] = 1.0
    spectrum = dft_samples(samples, dt, 0.0)
    expected = dt / math.sqrt(2.0 * math.pi) * np.exp(1j * spectrum.frequencies * 10 * dt)
    np.testing.assert_allclose(spectrum.amplitudes, expected, atol=1e-12)


def test_frequencies_are_increasing_and_uniform() -> None:
    spectrum = dft_samples(np.ones(33), 0.5)
    steps = np.diff(spectrum.frequencies)
    assert np.all(steps > 0)
    assert spectrum.d_omega == pytest.approx(2.0 * math.pi / (33 * 0.5))
    assert spectrum.frequencies[spectrum.bin_of(0.0)] == 0.0


def test_parseval_holds_for_random_samples() -> None:
    rng = np.random.default_rng(4)
    samples = rng.normal(size=512)
    spectrum = dft_samples(samples, 2e-3)
    assert parseval_check(samples, 2e-3, spectrum) < 1e-12


def test_uniform_step_rejects_jittered_times() -> None:
    assert uniform_step([0.0, 0.5, 1.0, 1.5]) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        uniform_step([0.0, 0.5, 1.2, 1.5])
    with pytest.raises(DomainError):
        dft_times([0.0, 1.0, 0.5], np.ones(3))


def test_single_sample_is_rejected() -> None:
    with pytest.raises(DomainError):
        dft_samples(np.ones(1), 1.0)
