import logging
import math

import numpy as np
import pytest

from beam.kinematics import kinematics_from_energy
from infra.errors import ConvergenceError, DomainError
from interaction.probability import (
    electric_transition_probability,
    magnetic_transition_probability,
)
from interaction.two_level import moment_vector, nv_spin_system, nv_zpl_system
from numerics.constants import ELECTRON_MASS, HBAR, SPEED_OF_LIGHT
from qed.backaction import (
    BackactionResult,
    backaction_result,
    overlap_magnetic,
    scattered_probability_electric,
    scattered_probability_magnetic,
)
from qed.integrate import (
    ChannelSums,
    estimate,
    qmc_outer_samples,
    sample_count,
    tensor_outer_samples,
)
from qed.kernels import outer_geometry
from qed.params import (
    DESK_GRID,
    Direction,
    GridResolution,
    WavePacketSpec,
    dimensionless_params,
    semiclassical_ratio_prefactor,
)

TINY_GRID = GridResolution(log2_samples=3, scrambles=2, radial_nodes=8, angular_nodes=8)


def _packet(distance: float = 70e-9) -> WavePacketSpec:
    return WavePacketSpec(
        delta_r_perp=5e-9,
        delta_z0=100e-9,
        kinetic_energy=2000.0,
        impact_offset=(0.0, distance),
    )


def test_grid_resolution_validation() -> None:
    with pytest.raises(ValueError):
        GridResolution(log2_samples=0)
    with pytest.raises(ValueError):
        GridResolution(scrambles=1)
    with pytest.raises(ValueError):
        GridResolution(radial_nodes=3)
    with pytest.raises(ValueError):
        GridResolution(angular_nodes=9)
    with pytest.raises(ValueError):
        GridResolution(hermite_nodes=2)


def test_refined_grid_doubles_outer_budget() -> None:
    grid = GridResolution(log2_samples=5, hermite_nodes=8)

    assert grid.refined(1) == grid
    twice = grid.refined(2)
    assert twice.log2_samples == 6
    assert twice.hermite_nodes == 12
    assert twice.radial_nodes == grid.radial_nodes
    assert sample_count(twice) == 2 * sample_count(grid)
    assert grid.refined(4).log2_samples == 7


def test_sample_count_modes() -> None:
    assert sample_count(GridResolution(log2_samples=4, scrambles=3)) == 2 * 3 * 16
    tensor = GridResolution(tensor_grid=True, hermite_nodes=8)
    assert sample_count(tensor) == 8**3 + 4**3
    assert tensor.describe()["mode"] == "tensor_grid"


def test_dimensionless_params_scales() -> None:
    packet = _packet()
    omega0 = 2.0 * math.pi * 2.87e9
    dp = dimensionless_params(packet, omega0)
    kin = kinematics_from_energy(2000.0)
    momentum = kin.gamma * ELECTRON_MASS * kin.velocity

    assert dp.xi == pytest.approx(20.0)
    assert dp.rho_offset == pytest.approx((0.0, 14.0))
    assert dp.rho == pytest.approx(14.0)
    assert dp.l_tilde == pytest.approx(1e7)
    assert dp.length_scale == 5e-9
    assert dp.omega0 == pytest.approx(omega0 * 100e-9 / SPEED_OF_LIGHT, rel=1e-12)
    assert dp.pi_z0 == pytest.approx(momentum * 100e-9 / HBAR, rel=1e-12)
    assert dp.inverse_beta == pytest.approx(SPEED_OF_LIGHT / kin.velocity, rel=1e-9)
    with pytest.raises(ValueError):
        dimensionless_params(packet, -1.0)


def test_wave_packet_validation() -> None:
    with pytest.raises(ValueError):
        WavePacketSpec(0.0, 1e-7, 2000.0, (0.0, 1e-8))
    with pytest.raises(ValueError):
        WavePacketSpec(5e-9, 1e-7, -1.0, (0.0, 1e-8))
    with pytest.raises(ValueError):
        WavePacketSpec(5e-9, 1e-7, 2000.0, (0.0, 1e-8), total_path=-1.0)


def test_direction_values() -> None:
    assert Direction("g_to_e") is Direction.ABSORPTION
    assert Direction.EMISSION.value == "e_to_g"


def test_semiclassical_prefactor_grows_with_offset() -> None:
    near = dimensionless_params(_packet(30e-9), 1e10)
    far = dimensionless_params(_packet(60e-9), 1e10)

    assert semiclassical_ratio_prefactor(far) == pytest.approx(
        4.0 * semiclassical_ratio_prefactor(near)
    )


def test_outer_geometry_at_packet_centre() -> None:
    dp = dimensionless_params(_packet(), 2.0 * math.pi * 2.87e9)
    outer = outer_geometry(dp, np.zeros(1), np.zeros((1, 2)), 0.0)

    assert outer.pz[0] == pytest.approx(dp.pi_z0)
    assert outer.pz_shift[0] == pytest.approx(0.0, abs=1e-12)
    assert outer.jacobian[0] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        outer_geometry(dp, np.array([-dp.pi_z0 - 1.0]), np.zeros((1, 2)), 0.0)


def test_outer_samples_integrate_gaussian_exactly() -> None:
    dp = dimensionless_params(_packet(), 1e10)
    expected = math.pi**1.5

    sampled = qmc_outer_samples(dp, GridResolution(log2_samples=6), scramble=0)
    radius_sq = np.sum(sampled.points**2, axis=1)
    assert len(sampled) == 2 * 64
    assert np.sum(sampled.weights * np.exp(-radius_sq)) == pytest.approx(expected, rel=1e-9)

    tensor = tensor_outer_samples(dp, 16, 5.0)
    radius_sq = np.sum(tensor.points**2, axis=1)
    assert np.sum(tensor.weights * np.exp(-radius_sq)) == pytest.approx(expected, rel=1e-7)


def test_mirrored_samples_keep_radius() -> None:
    dp = dimensionless_params(_packet(), 1e10)
    samples = qmc_outer_samples(dp, GridResolution(log2_samples=4), scramble=1)
    half = len(samples) // 2
    first, second = samples.points[:half], samples.points[half:]

    np.testing.assert_allclose(second[:, 0], first[:, 0])
    np.testing.assert_allclose(
        np.hypot(second[:, 1], second[:, 2]), np.hypot(first[:, 1], first[:, 2])
    )


def test_estimate_mean_and_standard_error() -> None:
    result = estimate([1.0, 2.0, 3.0], samples=30)
    assert result.value == pytest.approx(2.0)
    assert result.error == pytest.approx(1.0 / math.sqrt(3.0))
    assert result.samples == 30

    nested = estimate([1.0, 1.5], samples=10, tensor=True)
    assert nested.value == 1.0
    assert nested.error == pytest.approx(0.5)


def test_normalized_overlap() -> None:
    sums = ChannelSums(np.array([1.0, 1.0]), np.array([1.0, 1.0]), 1.0 + 1.0j, 2.0)
    assert sums.normalized_overlap == pytest.approx(0.5 + 0.5j)
    assert np.all(sums.total == 2.0)

    empty = ChannelSums(np.zeros(2), np.zeros(2), 0j, 0.0)
    assert empty.normalized_overlap == 0j


def test_magnetic_probability_rejects_bad_spin_and_longitudinal_moment() -> None:
    dp = dimensionless_params(_packet(), 2.0 * math.pi * 2.87e9)
    moment = moment_vector(nv_spin_system())

    with pytest.raises(ValueError):
        scattered_probability_magnetic(dp, 0.3, moment, TINY_GRID)
    with pytest.raises(DomainError):
        scattered_probability_magnetic(dp, 0.5, np.array([0.0, 0.0, 1e-23]), TINY_GRID)
    with pytest.raises(DomainError):
        scattered_probability_magnetic(dp, 0.5, np.zeros(3), TINY_GRID)


def test_zero_dipole_gives_zero_probability() -> None:
    dp = dimensionless_params(_packet(), 3.0e15)
    channels = scattered_probability_electric(dp, np.zeros(3), -0.5, TINY_GRID)

    assert channels.total == 0.0
    assert channels.conserving.error == 0.0


def test_backaction_result_on_small_grid() -> None:
    packet = _packet()
    system = nv_spin_system()
    result = backaction_result(
        packet, system, TINY_GRID, probability_tol=1e9, overlap_tol=1e9, max_attempts=1
    )
    kin = kinematics_from_energy(packet.kinetic_energy)

    assert result.p_semiclassical == pytest.approx(
        magnetic_transition_probability(system, kin, 0.0, 70e-9)
    )
    assert result.p_plus >= 0.0
    assert result.p_minus >= 0.0
    assert result.samples_used == sample_count(TINY_GRID)
    assert result.grid_meta["mode"] == "rqmc"
    assert result.params["direction"] == "e_to_g"
    record = result.to_record()
    assert {"P_plus", "P_minus", "overlap_re", "ratio", "err_estimates"} <= set(record)


def test_backaction_refines_then_reports_partial(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.WARNING, logger="klystron")

    with pytest.raises(ConvergenceError) as excinfo:
        backaction_result(
            _packet(),
            nv_spin_system(),
            TINY_GRID,
            probability_tol=0.0,
            overlap_tol=0.0,
            max_attempts=2,
        )

    retries = [r for r in caplog.records if getattr(r, "event_type", "") == "convergence_retry"]
    assert [r.metadata["attempt"] for r in retries] == [1]
    partial = excinfo.value.partial
    assert isinstance(partial, BackactionResult)
    assert partial.samples_used == sample_count(TINY_GRID.refined(2))
    assert excinfo.value.error_estimate > 0.0


def test_overlap_estimate_on_small_grid() -> None:
    dp = dimensionless_params(_packet(), 2.0 * math.pi * 2.87e9)
    result = overlap_magnetic(dp, moment_vector(nv_spin_system()), TINY_GRID)

    assert result.samples == sample_count(TINY_GRID)
    assert math.isfinite(result.value.real)
    assert math.isfinite(result.value.imag)
    assert result.error >= 0.0


def _desk_result(distance: float) -> BackactionResult:
    # one attempt on the desk grid; the assertions below bound the physics directly
    return backaction_result(
        _packet(distance),
        nv_spin_system(),
        DESK_GRID,
        probability_tol=1.0,
        overlap_tol=1.0,
        max_attempts=1,
    )


@pytest.mark.slow
def test_backaction_approaches_point_electron_limit_on_desk_grid() -> None:
    near = _desk_result(30e-9)
    far = _desk_result(50e-9)

    assert far.ratio == pytest.approx(1.0, abs=0.05)
    assert near.ratio == pytest.approx(1.0, abs=0.1)
    assert abs(far.ratio - 1.0) < abs(near.ratio - 1.0)
    assert abs(near.overlap) >= 0.98
    assert abs(far.overlap) > abs(near.overlap)
    for result in (near, far):
        spread = 3.0 * (result.errors["P_plus"] + result.errors["P_minus"])
        assert result.p_plus == pytest.approx(result.p_minus, rel=1e-6, abs=spread)
        # the overlap is a pure phase rotation at leading order
        assert abs(result.overlap.real) < 0.01 * abs(result.overlap.imag)


@pytest.mark.slow
def test_electric_backaction_tracks_semiclassical_probability() -> None:
    optical = nv_zpl_system()
    packet = _packet(70e-9)
    dp = dimensionless_params(packet, optical.omega0)
    semi = electric_transition_probability(
        optical, kinematics_from_energy(packet.kinetic_energy), *packet.impact_offset
    )

    channels = [
        scattered_probability_electric(dp, optical.electric_moment, spin, DESK_GRID)
        for spin in (0.5, -0.5)
    ]
    ratio = 0.5 * sum(channel.total for channel in channels) / semi

    assert semi > 0.0
    assert 1.0 / 1.5 <= ratio <= 1.5
