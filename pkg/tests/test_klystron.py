import math

import numpy as np
import pytest

from beam.kinematics import kinematics_from_energy, modulation_wavelength
from beam.klystron import (
    BeamSpec,
    ModulatedCurrent,
    analytic_current,
    bunching_parameter,
    fourier_coefficient,
    kepler_theta,
    modulated_current,
    velocity_spread_effect,
)
from infra.errors import DomainError, OvertakingError
from numerics.constants import SPEED_OF_LIGHT


def _k41_beam(**overrides: float) -> BeamSpec:
    values = {
        "mean_current": 100e-6,
        "mod_angular_freq": 2.0 * math.pi * 254e6,
        "mod_depth": 0.05,
        "drift_length": 1.0,
        "kinematics": kinematics_from_energy(18000.0),
        "waist": 50e-6,
        "impact_distance": 250e-6,
    }
    values.update(overrides)
    return BeamSpec(**values)


def test_kinematics_match_relativistic_formulas() -> None:
    kin = kinematics_from_energy(18000.0)
    gamma = 1.0 + 18000.0 / 510998.95
    assert kin.gamma == pytest.approx(gamma)
    assert kin.beta == pytest.approx(math.sqrt(1.0 - gamma**-2), rel=1e-12)
    assert kinematics_from_energy(0.0).velocity == 0.0


def test_low_energy_speed_is_accurate() -> None:
    kin = kinematics_from_energy(1e-3)
    classical = math.sqrt(2.0 * 1e-3 / 510998.95) * SPEED_OF_LIGHT
    assert kin.velocity == pytest.approx(classical, rel=1e-8)


def test_negative_energy_is_rejected() -> None:
    with pytest.raises(DomainError):
        kinematics_from_energy(-1.0)


def test_modulation_wavelength() -> None:
    kin = kinematics_from_energy(2000.0)
    omega = 2.0 * math.pi * 2.87e9
    assert modulation_wavelength(kin, omega) == pytest.approx(kin.velocity / 2.87e9)


def test_k41_bunching_parameter() -> None:
    assert bunching_parameter(_k41_beam()) == pytest.approx(0.48844, rel=1e-4)


def test_overtaking_raises() -> None:
    with pytest.raises(OvertakingError):
        bunching_parameter(_k41_beam(drift_length=3.0))
    with pytest.raises(OvertakingError):
        ModulatedCurrent(r_b=1.0, mean_current=1.0, omega0=1.0, v0=1.0)


@pytest.mark.parametrize("r_b", [0.0, 0.3, 0.9, 0.999])
def test_kepler_theta_solves_equation(r_b: float) -> None:
    tau = np.linspace(-20.0, 20.0, 401)
    theta = kepler_theta(tau, r_b)
    np.testing.assert_allclose(theta - r_b * np.sin(theta), tau, atol=1e-12)


def test_kepler_theta_scalar_and_domain() -> None:
    assert isinstance(kepler_theta(1.0, 0.5), float)
    with pytest.raises(DomainError):
        kepler_theta(1.0, 1.0)


def test_analytic_current_averages_to_mean() -> None:
    mc = ModulatedCurrent(r_b=0.6, mean_current=2.0, omega0=1.0, v0=1.0)
    t = 2.0 * math.pi * np.arange(4096) / 4096
    current = analytic_current(mc, 0.0, t)
    assert float(np.mean(current)) == pytest.approx(2.0, rel=1e-10)
    assert float(np.max(current)) == pytest.approx(2.0 / 0.4, rel=1e-6)


def test_analytic_current_is_a_travelling_wave() -> None:
    mc = ModulatedCurrent(r_b=0.4, mean_current=1.0, omega0=3.0, v0=2.0)
    assert analytic_current(mc, 2.0, 1.5) == pytest.approx(analytic_current(mc, 0.0, 0.5))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_fourier_coefficients_match_sampled_current(n: int) -> None:
    mc = ModulatedCurrent(r_b=0.48844, mean_current=100e-6, omega0=1.0, v0=1.0)
    tau = 2.0 * math.pi * np.arange(2048) / 2048
    current = analytic_current(mc, 0.0, tau)
    numeric = 2.0 * np.mean(current * np.cos(n * tau))
    assert numeric == pytest.approx(fourier_coefficient(n, mc.r_b, mc.mean_current), rel=1e-9)


def test_fourier_coefficient_rejects_dc_term() -> None:
    with pytest.raises(DomainError):
        fourier_coefficient(0, 0.5, 1.0)


def test_modulated_current_carries_beam_parameters() -> None:
    spec = _k41_beam()
    mc = modulated_current(spec, z0=0.2)
    assert mc.mean_current == spec.mean_current
    assert mc.v0 == spec.kinematics.velocity
    assert mc.z0 == 0.2


def test_velocity_spread_effect() -> None:
    assert velocity_spread_effect(_k41_beam(energy_spread=1.8)) == pytest.approx(1e-4)


@pytest.mark.parametrize(
    "field, value",
    [("mean_current", 0.0), ("mod_depth", 1.0), ("waist", 0.0), ("linewidth", -1.0)],
)
def test_beam_spec_validation(field: str, value: float) -> None:
    with pytest.raises(ValueError):
        _k41_beam(**{field: value})
