import math

import numpy as np
import pytest

from beam.kinematics import kinematics_from_energy
from beam.klystron import BeamSpec, bunching_parameter, fourier_coefficient
from bloch.drive import (
    DriveSpec,
    DriveVariant,
    linewidth_to_b,
    rabi_from_current,
    shot_damping_rate,
    transition_moment,
)
from bloch.mean_field import (
    first_maximum,
    inversion_peaks,
    mean_rwa_matrix,
    oscillation_frequency,
    propagate_exact,
    solve_driven,
    solve_mean_rwa,
    solve_shot_noise,
)
from bloch.spikes import (
    free_evolution,
    integrate_spike_train,
    merge_windows,
    solve_spike_train,
    spike_realizations,
)
from bloch.state import BlochState, BlochTrajectory, average_trajectories, repaired
from ensemble.drift import ElectronTrain, empty_train
from ensemble.statistics import continuity_condition
from ensemble.trace import TraceGeometry
from infra.errors import DensityMatrixError, DomainError
from interaction.probability import magnetic_transition_probability
from interaction.two_level import TwoLevelSystem, k41_clock_system, nv_spin_system
from numerics.constants import BOHR_MAGNETON, ELECTRON_G_FACTOR, HBAR, VACUUM_PERMEABILITY
from numerics.rng import RngStream

RABI = 2.0 * math.pi * 100.0


def _generic(omega0: float = 2.0 * math.pi * 1e3) -> TwoLevelSystem:
    return TwoLevelSystem(omega0=omega0, magnetic_moment=np.array([1e-23, 0.0, 0.0]))


def _train(arrivals: list[float], energy: float = 2000.0) -> ElectronTrain:
    t = np.array(arrivals)
    velocity = np.full(t.size, kinematics_from_energy(energy).velocity)
    return ElectronTrain(t - 1e-9, t, np.zeros((t.size, 2)), velocity)


def test_state_constructors() -> None:
    state = BlochState.from_angles(math.pi / 4.0, 0.0)
    assert state.rho_ee == pytest.approx(0.5)
    assert abs(state.rho_eg) == pytest.approx(0.5)
    assert BlochState.ground().inversion == -1.0
    assert BlochState.excited().inversion == 1.0
    np.testing.assert_allclose(BlochState.from_vector(state.vector()).vector(), state.vector())


def test_invalid_states_are_rejected() -> None:
    with pytest.raises(DensityMatrixError):
        BlochState.from_amplitudes(1.0, 1.0)
    with pytest.raises(DensityMatrixError):
        BlochState(0.5, 0.5, 0.6 + 0j).validate()


def test_repair_only_fixes_float_noise() -> None:
    noisy = BlochState(1.0 + 1e-14, -1e-14, 0j)
    fixed = repaired(noisy)
    assert fixed.rho_ee == 1.0
    assert fixed.rho_gg == 0.0
    with pytest.raises(DensityMatrixError):
        repaired(BlochState(1.1, -0.1, 0j))


def test_average_trajectories_requires_shared_grid() -> None:
    t = np.linspace(0.0, 1.0, 3)
    a = BlochTrajectory(t, np.zeros(3), np.ones(3), np.zeros(3, dtype=complex))
    b = BlochTrajectory(t, np.ones(3), np.zeros(3), np.zeros(3, dtype=complex))
    mean = average_trajectories([a, b])
    np.testing.assert_allclose(mean.rho_ee, 0.5)
    other = BlochTrajectory(t + 1.0, np.ones(3), np.zeros(3), np.zeros(3, dtype=complex))
    with pytest.raises(ValueError):
        average_trajectories([a, other])


def test_k41_rabi_frequency_from_current() -> None:
    resonant = fourier_coefficient(1, 0.48844, 100e-6)
    field = VACUUM_PERMEABILITY * resonant / (2.0 * math.pi * 250e-6)
    expected = ELECTRON_G_FACTOR * BOHR_MAGNETON / 2.0 * field / HBAR
    assert rabi_from_current(k41_clock_system(), resonant, 250e-6) == pytest.approx(expected)


def test_transition_moment_sign_depends_on_kind() -> None:
    assert transition_moment(k41_clock_system(), 1e-6) < 0.0
    assert transition_moment(nv_spin_system(), 1e-6) > 0.0


def test_drive_helpers() -> None:
    assert linewidth_to_b(2.0 * math.pi * 25.0) == pytest.approx(math.pi * 25.0)
    assert shot_damping_rate(1e-12, 1e-4) == pytest.approx(1e-16 / 1.602176634e-19)
    with pytest.raises(ValueError):
        DriveSpec(DriveVariant.MEAN_RWA, -1.0)


def test_resonant_rabi_oscillation() -> None:
    t = np.linspace(0.0, 0.02, 401)
    trajectory = solve_mean_rwa(
        _generic(), DriveSpec(DriveVariant.MEAN_RWA, RABI), BlochState.ground(), t
    )
    np.testing.assert_allclose(trajectory.rho_ee, np.sin(0.5 * RABI * t) ** 2, atol=1e-7)
    assert trajectory.max_trace_error() < 1e-10


def test_matrix_exponential_agrees_with_integrator() -> None:
    system = _generic().with_relaxation(30.0, 40.0)
    drive = DriveSpec(DriveVariant.MEAN_RWA, RABI, dephasing=20.0, detuning=50.0)
    t = np.linspace(0.0, 0.01, 21)
    numeric = solve_mean_rwa(system, drive, BlochState.ground(), t)
    exact = propagate_exact(mean_rwa_matrix(system, drive), BlochState.ground(), t)
    np.testing.assert_allclose(numeric.rho_ee, exact.rho_ee, atol=1e-8)
    np.testing.assert_allclose(numeric.rho_eg, exact.rho_eg, atol=1e-8)


def test_phase_noise_dephasing_drives_to_half() -> None:
    t = np.linspace(0.0, 0.5, 201)
    drive = DriveSpec(DriveVariant.MEAN_RWA, RABI, dephasing=200.0)
    trajectory = solve_mean_rwa(_generic(), drive, BlochState.ground(), t)
    assert trajectory.rho_ee[-1] == pytest.approx(0.5, abs=1e-3)


def test_shot_noise_damping_without_drive() -> None:
    t = np.linspace(0.0, 0.01, 51)
    drive = DriveSpec(DriveVariant.SHOT_NOISE, 0.0, shot_damping=100.0)
    trajectory = solve_shot_noise(_generic(), drive, BlochState.ground(), t)
    np.testing.assert_allclose(
        trajectory.rho_ee, 0.5 * (1.0 - np.exp(-200.0 * t)), atol=1e-9
    )


def test_solvers_check_their_variant() -> None:
    t = np.linspace(0.0, 1.0, 3)
    with pytest.raises(DomainError):
        solve_mean_rwa(_generic(), DriveSpec(DriveVariant.SHOT_NOISE, 1.0), BlochState.ground(), t)
    with pytest.raises(DomainError):
        solve_shot_noise(_generic(), DriveSpec(DriveVariant.MEAN_RWA, 1.0), BlochState.ground(), t)


def test_driven_solution_reduces_to_rwa() -> None:
    rabi = 2.0 * math.pi * 10.0
    system = _generic(2.0 * math.pi * 1e3)
    t = np.linspace(0.0, 0.1, 101)
    driven = solve_driven(system, rabi, system.omega0, BlochState.ground(), t)
    rwa = solve_mean_rwa(
        system, DriveSpec(DriveVariant.MEAN_RWA, rabi), BlochState.ground(), t
    )
    np.testing.assert_allclose(driven.rho_ee, rwa.rho_ee, atol=0.02)


def test_oscillation_analysis() -> None:
    t = np.linspace(0.0, 0.1, 20001)
    trajectory = solve_mean_rwa(
        _generic(), DriveSpec(DriveVariant.MEAN_RWA, RABI), BlochState.ground(), t
    )
    t_max, value = first_maximum(trajectory)
    assert t_max == pytest.approx(math.pi / RABI, rel=1e-3)
    assert value == pytest.approx(1.0, abs=1e-6)
    assert oscillation_frequency(trajectory) == pytest.approx(RABI, rel=1e-3)
    assert len(inversion_peaks(trajectory)) == 10


def test_flat_inversion_has_no_maximum() -> None:
    t = np.linspace(0.0, 1.0, 11)
    flat = BlochTrajectory(t, np.zeros(11), np.ones(11), np.zeros(11, dtype=complex))
    with pytest.raises(DomainError):
        first_maximum(flat)
    with pytest.raises(DomainError):
        oscillation_frequency(flat)


def test_free_evolution_relaxes() -> None:
    state = free_evolution(BlochState(1.0, 0.0, 0j), 1.0, math.log(2.0), 0.0)
    assert state.rho_ee == pytest.approx(0.5)
    assert state.rho_gg == pytest.approx(0.5)


def test_close_electrons_share_one_window() -> None:
    train = _train([1e-9, 1e-9 + 1e-15, 2e-9])
    windows = merge_windows(train, 70e-9)
    assert windows.starts.size == 2
    np.testing.assert_array_equal(windows.members[0], [0, 1])


def test_single_electron_kick_matches_semiclassical_probability() -> None:
    system = nv_spin_system().with_relaxation(0.0, 0.0)
    d = 70e-9
    t = np.linspace(0.0, 2e-9, 5)
    trajectory = integrate_spike_train(
        system, _train([1e-9]), TraceGeometry(d), BlochState.ground(), t
    )
    expected = magnetic_transition_probability(system, kinematics_from_energy(2000.0), 0.0, d)
    assert trajectory.rho_ee[-1] == pytest.approx(expected, rel=1e-3)
    assert trajectory.rho_ee[0] == 0.0


def test_empty_trains_only_relax() -> None:
    system = nv_spin_system()
    t = np.linspace(0.0, 1e-3, 11)
    trajectory = solve_spike_train(system, [], TraceGeometry(70e-9), BlochState.excited(), t)
    np.testing.assert_allclose(trajectory.rho_ee, np.exp(-system.gamma1 * t), rtol=1e-12)
    again = solve_spike_train(
        system, [empty_train(), empty_train()], TraceGeometry(70e-9), BlochState.excited(), t
    )
    np.testing.assert_allclose(again.rho_ee, trajectory.rho_ee)


# macro-electron weight that keeps each spike far below a radian for the 41K beam
SPIKE_WEIGHT = 1e8


def _k41_beam() -> BeamSpec:
    return BeamSpec(
        mean_current=100e-6,
        mod_angular_freq=2.0 * math.pi * 254e6,
        mod_depth=0.05,
        drift_length=1.0,
        kinematics=kinematics_from_energy(18000.0),
        waist=50e-6,
        impact_distance=250e-6,
    )


def test_spike_realizations_do_not_depend_on_workers() -> None:
    spec = _k41_beam()
    duration = 2e-5
    serial = spike_realizations(
        spec, RngStream(41), duration, n_realizations=3, electrons_per_sample=SPIKE_WEIGHT
    )
    threaded = spike_realizations(
        spec,
        RngStream(41),
        duration,
        n_realizations=3,
        electrons_per_sample=SPIKE_WEIGHT,
        workers=3,
    )

    assert len(serial) == 3
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.t_arrive, b.t_arrive)
        np.testing.assert_array_equal(a.offsets, b.offsets)
        assert a.weight == SPIKE_WEIGHT
        assert len(a) > 0
        # arrivals are measured from the unmodulated transit time
        assert a.t_arrive.min() > -2.0 * spec.period
        assert a.t_arrive.max() < duration + 2.0 * spec.period

    t = np.linspace(0.0, duration, 5)
    system = k41_clock_system()
    geometry = TraceGeometry(spec.impact_distance)
    one = solve_spike_train(system, serial, geometry, BlochState.ground(), t)
    three = solve_spike_train(system, threaded, geometry, BlochState.ground(), t, workers=3)
    np.testing.assert_array_equal(one.rho_ee, three.rho_ee)
    np.testing.assert_array_equal(one.rho_eg, three.rho_eg)
    with pytest.raises(ValueError):
        spike_realizations(spec, RngStream(41), duration, n_realizations=0)


@pytest.mark.slow
def test_averaged_spikes_flop_at_the_mean_field_rabi_frequency() -> None:
    spec = _k41_beam()
    system = k41_clock_system()
    resonant = fourier_coefficient(1, bunching_parameter(spec), spec.mean_current)
    rabi = rabi_from_current(system, resonant, spec.impact_distance)
    duration = 2.3 * 2.0 * math.pi / rabi
    trains = spike_realizations(
        spec, RngStream(41), duration, n_realizations=3, electrons_per_sample=SPIKE_WEIGHT
    )
    t = np.linspace(0.0, duration, 1201)

    trajectory = solve_spike_train(
        system, trains, TraceGeometry(spec.impact_distance), BlochState.ground(), t
    )

    assert continuity_condition(spec) < 1e-2
    assert oscillation_frequency(trajectory) == pytest.approx(rabi, rel=0.05)
    assert trajectory.inversion[0] == pytest.approx(-1.0)
