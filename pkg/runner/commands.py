"""Subcommands: each one orchestrates the simulation packages for a scenario."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Callable, cast

import numpy as np

from beam.kinematics import kinematics_from_energy
from beam.klystron import (
    BeamSpec,
    ModulatedCurrent,
    analytic_current,
    bunching_parameter,
    fourier_coefficient,
    kepler_theta,
    modulated_current,
)
from beam.trajectories import (
    BeamTrajectory,
    circular_section_trajectory,
    linear_trajectory,
    loglog_slope,
    profile_fwhm,
    rabi_profile,
    static_trajectory,
)
from bloch.drive import (
    DriveSpec,
    DriveVariant,
    linewidth_to_b,
    rabi_from_current,
    shot_damping_rate,
)
from bloch.mean_field import first_maximum, oscillation_frequency, solve_mean_rwa, solve_shot_noise
from bloch.spikes import solve_spike_train, spike_realizations
from bloch.state import BlochState, BlochTrajectory
from ensemble.phase_noise import phase_noise_on_grid
from ensemble.statistics import (
    harmonic_amplitudes,
    noise_floor,
    peak_frequency,
    snr,
)
from ensemble.trace import DepositMode, FieldTrace, TraceGeometry, synthesize_beam_trace
from infra.errors import DomainError
from interaction.estimates import (
    dielectric_factor,
    doppler_detuning,
    electric_loss_per_flop,
    gaussian_peak_current_density,
    incoherent_loss_fraction,
    lamb_dicke_bound,
    recoil_momentum_bound,
)
from interaction.probability import (
    electric_transition_probability,
    magnetic_transition_probability,
)
from interaction.two_level import TwoLevelSystem, effective_moment, moment_vector
from numerics.constants import ATOMIC_MASS_UNIT
from numerics.rng import RngStream
from numerics.special import bessel_j
from numerics.spectral import dft
from qed.backaction import backaction_result, overlap_magnetic, scattered_probability_electric
from qed.params import dimensionless_params
from runner.outputs import Table
from runner.scenario import ScenarioConfig

FOURIER_HARMONICS = 5


@dataclass(frozen=True)
class RunContext:
    config: ScenarioConfig
    seed: int
    workers: int = 1
    full: bool = False
    max_refinements: int = 3
    config_digest: str = ""

    @property
    def rng(self) -> RngStream:
        return RngStream(self.seed)


@dataclass
class CommandResult:
    tables: list[Table] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Command:
    name: str
    run: Callable[[RunContext], CommandResult]
    help: str
    requires: tuple[str, ...] = ()


def impact_point(system: TwoLevelSystem, d: float) -> tuple[float, float]:
    """Electron position at distance d where the field is parallel to the moment."""
    mx, my = system.moment_direction[:2]
    norm = math.hypot(mx, my)
    if norm == 0.0:
        return d, 0.0
    return -my / norm * d, mx / norm * d


def _time_grid(duration: float, n_times: int) -> np.ndarray:
    return np.linspace(0.0, duration, n_times)


def _bloch_table(name: str, trajectory: BlochTrajectory) -> Table:
    return Table.from_columns(
        name,
        t=trajectory.times,
        rho_ee=trajectory.rho_ee,
        rho_gg=trajectory.rho_gg,
        rho_eg_re=trajectory.rho_eg.real,
        rho_eg_im=trajectory.rho_eg.imag,
        inversion=trajectory.inversion,
    )


def _oscillation_summary(trajectory: BlochTrajectory, rabi: float) -> dict[str, Any]:
    summary: dict[str, Any] = {"rabi": rabi, "rabi_hz": rabi / (2.0 * math.pi)}
    try:
        t_max, value = first_maximum(trajectory)
        summary.update(first_max_time=t_max, first_max_inversion=value)
    except DomainError:
        summary.update(first_max_time=None, first_max_inversion=None)
    try:
        measured = oscillation_frequency(trajectory)
        summary.update(oscillation_frequency=measured, frequency_error=measured / rabi - 1.0)
    except DomainError:
        summary.update(oscillation_frequency=None, frequency_error=None)
    return summary


def _resonant_rabi(config: ScenarioConfig) -> tuple[float, float, float]:
    """(r_b, resonant current I_w0, Rabi frequency) of the configured beam and system."""
    spec = config.beam_spec()
    r_b = bunching_parameter(spec)
    resonant = fourier_coefficient(1, r_b, spec.mean_current) if r_b > 0 else 0.0
    rabi = rabi_from_current(config.system(), resonant, spec.impact_distance)
    return r_b, resonant, rabi


def kepler_current(ctx: RunContext) -> CommandResult:
    spec = ctx.config.beam_spec()
    mc = modulated_current(spec)
    n = ctx.config.solver().kepler_samples
    t = spec.period * np.arange(n) / n
    tau = spec.mod_angular_freq * t
    current = np.asarray(analytic_current(mc, 0.0, t))
    theta = np.asarray(kepler_theta(tau, mc.r_b))

    orders = np.arange(1, FOURIER_HARMONICS + 1)
    numeric = np.array([2.0 * np.mean(current * np.cos(k * tau)) for k in orders])
    analytic = np.array([fourier_coefficient(int(k), mc.r_b, mc.mean_current) for k in orders])
    rel_error = np.abs(numeric - analytic) / np.maximum(np.abs(analytic), 1e-300)
    return CommandResult(
        tables=[
            Table.from_columns("kepler_current", t=t, tau=tau, theta=theta, current=current),
            Table.from_columns(
                "fourier", n=orders, numeric=numeric, analytic=analytic, rel_error=rel_error
            ),
        ],
        summary={"r_b": mc.r_b, "max_fourier_rel_error": float(np.max(rel_error))},
    )


def _beam_trace(
    ctx: RunContext, spec: BeamSpec, periods: int, stream: RngStream
) -> FieldTrace:
    options = ctx.config.spectrum()
    noise = None
    if spec.linewidth > 0:
        noise = phase_noise_on_grid(
            -spec.period,
            (periods + 1) * spec.period,
            linewidth_to_b(spec.linewidth),
            stream.derive(1),
        )
    return synthesize_beam_trace(
        spec,
        stream.derive(0),
        periods,
        options.samples_per_period,
        noise=noise,
        mode=cast(DepositMode, options.mode),
        workers=ctx.workers,
        config_digest=ctx.config_digest,
    )


def spectrum(ctx: RunContext) -> CommandResult:
    spec = ctx.config.beam_spec()
    options = ctx.config.spectrum()
    periods = options.periods(ctx.full)
    omega0 = spec.mod_angular_freq
    r_b = bunching_parameter(spec)
    trace = _beam_trace(ctx, spec, periods, ctx.rng.derive(0))
    result = dft(trace)

    positive = result.frequencies >= 0
    amplitudes = result.amplitudes[positive]
    tables = [
        Table.from_columns("trace", t=trace.times, field=trace.samples),
        Table.from_columns(
            "spectrum",
            frequency_hz=result.frequencies[positive] / (2.0 * math.pi),
            amplitude=np.abs(amplitudes),
            amplitude_re=amplitudes.real,
            amplitude_im=amplitudes.imag,
        ),
    ]
    orders = np.arange(1, options.harmonics + 1)
    measured = harmonic_amplitudes(result, omega0, options.harmonics)
    first = bessel_j(1, r_b).value
    expected = np.full(orders.size, math.nan)
    if first > 0:
        expected = np.array([bessel_j(int(k), k * r_b).value for k in orders]) / first
    tables.append(
        Table.from_columns(
            "harmonics",
            n=orders,
            amplitude=measured,
            ratio=measured / measured[0],
            expected_ratio=expected,
        )
    )
    summary: dict[str, Any] = {
        "r_b": r_b,
        "periods": periods,
        "electron_count": trace.electron_count,
        "peak_frequency_hz": peak_frequency(result, 0.5 * omega0) / (2.0 * math.pi),
        "bin_width_hz": result.d_omega / (2.0 * math.pi),
    }
    try:
        floor = noise_floor(trace, options.harmonics, omega0, result)
    except DomainError as exc:
        summary["noise_floor"] = None
        summary["noise_floor_note"] = str(exc)
        return CommandResult(tables, summary)
    summary["noise_floor"] = {
        "empirical": floor.empirical,
        "theoretical": floor.theoretical,
        "ratio": floor.ratio,
        "bins": floor.n_bins,
    }
    summary["snr"] = snr(result, omega0, floor)

    if options.compare_current > 0:
        other_periods = options.compare_periods or periods
        other = dataclasses.replace(spec, mean_current=options.compare_current)
        other_trace = _beam_trace(ctx, other, other_periods, ctx.rng.derive(1))
        other_result = dft(other_trace)
        other_floor = noise_floor(other_trace, options.harmonics, omega0, other_result)
        other_snr = snr(other_result, omega0, other_floor)
        summary["compare"] = {
            "mean_current": options.compare_current,
            "periods": other_periods,
            "snr": other_snr,
            "snr_ratio": other_snr / summary["snr"],
            "expected_snr_ratio": math.sqrt(
                options.compare_current * other_periods / (spec.mean_current * periods)
            ),
        }
    return CommandResult(tables, summary)


def bloch_mean(ctx: RunContext) -> CommandResult:
    config = ctx.config
    spec = config.beam_spec()
    solver = config.solver()
    r_b, resonant, rabi = _resonant_rabi(config)
    b = linewidth_to_b(spec.linewidth)
    drive = DriveSpec(DriveVariant.MEAN_RWA, rabi, dephasing=b)
    trajectory = solve_mean_rwa(
        config.system(),
        drive,
        BlochState.ground(),
        _time_grid(solver.duration, solver.n_times),
        solver.rel_tol,
        solver.abs_tol,
    )
    summary = _oscillation_summary(trajectory, rabi)
    summary.update(r_b=r_b, resonant_current=resonant, dephasing=b)
    return CommandResult([_bloch_table("bloch_mean", trajectory)], summary)


def bloch_shot(ctx: RunContext) -> CommandResult:
    config = ctx.config
    spec = config.beam_spec()
    solver = config.solver()
    system = config.system()
    _, _, rabi = _resonant_rabi(config)
    x, y = impact_point(system, spec.impact_distance)
    probability = magnetic_transition_probability(system, spec.kinematics, x, y)
    damping = shot_damping_rate(probability, spec.mean_current)
    t_grid = _time_grid(solver.duration, solver.n_times)
    shot = solve_shot_noise(
        system,
        DriveSpec(DriveVariant.SHOT_NOISE, rabi, shot_damping=damping),
        BlochState.ground(),
        t_grid,
        solver.rel_tol,
        solver.abs_tol,
    )
    reference = solve_mean_rwa(
        system,
        DriveSpec(DriveVariant.MEAN_RWA, rabi),
        BlochState.ground(),
        t_grid,
        solver.rel_tol,
        solver.abs_tol,
    )
    deviation = np.abs(shot.inversion - reference.inversion)
    return CommandResult(
        [
            Table.from_columns(
                "bloch_shot",
                t=t_grid,
                inversion_shot=shot.inversion,
                inversion_reference=reference.inversion,
                deviation=deviation,
            )
        ],
        {
            "rabi": rabi,
            "single_electron_probability": probability,
            "shot_damping": damping,
            "max_deviation": float(np.max(deviation)),
        },
    )


def bloch_spikes(ctx: RunContext) -> CommandResult:
    config = ctx.config
    spec = config.beam_spec()
    solver = config.solver()
    system = config.system()
    _, resonant, rabi = _resonant_rabi(config)
    weight = config.electrons_per_sample(ctx.full)
    trains = spike_realizations(
        spec,
        ctx.rng,
        solver.duration,
        n_realizations=solver.realizations,
        electrons_per_sample=weight,
        workers=ctx.workers,
    )
    trajectory = solve_spike_train(
        system,
        trains,
        TraceGeometry(spec.impact_distance),
        BlochState.ground(),
        _time_grid(solver.duration, solver.n_times),
        workers=ctx.workers,
        substeps=solver.substeps,
    )
    summary = _oscillation_summary(trajectory, rabi)
    summary.update(
        realizations=len(trains),
        electrons_per_sample=weight,
        samples=int(sum(len(train) for train in trains)),
        resonant_current=resonant,
        max_trace_error=trajectory.max_trace_error(),
    )
    return CommandResult([_bloch_table("bloch_spikes", trajectory)], summary)


def _refinement_args(ctx: RunContext) -> dict[str, Any]:
    solver = ctx.config.solver()
    return {
        "workers": ctx.workers,
        "probability_tol": solver.probability_tol,
        "overlap_tol": solver.overlap_tol,
        "max_attempts": ctx.max_refinements + 1,
    }


def probability(ctx: RunContext) -> CommandResult:
    config = ctx.config
    spec = config.beam_spec()
    system = config.system()
    optical = config.optical_system()
    x, y = impact_point(system, spec.impact_distance)
    summary: dict[str, Any] = {
        "impact_distance": spec.impact_distance,
        "P_magnetic": magnetic_transition_probability(system, spec.kinematics, x, y),
    }
    if optical is not None:
        summary["P_electric"] = electric_transition_probability(optical, spec.kinematics, x, y)
    if not config.has("wavepacket"):
        return CommandResult([], summary)

    grid = config.grid(ctx.full)
    direction = config.direction()
    packets = config.wave_packets()
    records = [
        backaction_result(
            wp, system, grid, direction=direction, **_refinement_args(ctx)
        )
        for wp in packets
    ]
    distances = np.array([math.hypot(*wp.impact_offset) for wp in packets])
    tables = [
        Table.from_columns(
            "probability",
            impact_distance=distances,
            rho=distances / packets[0].delta_r_perp,
            P_semiclassical=[r.p_semiclassical for r in records],
            P_plus=[r.p_plus for r in records],
            P_minus=[r.p_minus for r in records],
            ratio=[r.ratio for r in records],
            err_plus=[r.errors["P_plus"] for r in records],
            err_minus=[r.errors["P_minus"] for r in records],
            overlap_re=[r.overlap.real for r in records],
            overlap_im=[r.overlap.imag for r in records],
        )
    ]
    summary["backaction"] = [r.to_record() for r in records]

    if config.section("wavepacket")["electric"]:
        if optical is None or optical.electric_moment is None:
            raise DomainError("electric back-action needs system.optical_dipole")
        rows = []
        for wp in packets:
            dp = dimensionless_params(wp, optical.omega0)
            kin = kinematics_from_energy(wp.kinetic_energy)
            semi = electric_transition_probability(optical, kin, *wp.impact_offset)
            plus = scattered_probability_electric(
                dp, optical.electric_moment, 0.5, grid, direction=direction, workers=ctx.workers
            )
            minus = scattered_probability_electric(
                dp, optical.electric_moment, -0.5, grid, direction=direction, workers=ctx.workers
            )
            mean = 0.5 * (plus.total + minus.total)
            rows.append(
                [
                    math.hypot(*wp.impact_offset),
                    semi,
                    plus.conserving.value,
                    plus.flip.value,
                    minus.conserving.value,
                    minus.flip.value,
                    mean / semi if semi > 0 else math.nan,
                ]
            )
        tables.append(
            Table(
                "probability_electric",
                [
                    "impact_distance",
                    "P_semiclassical",
                    "conserving_plus",
                    "flip_plus",
                    "conserving_minus",
                    "flip_minus",
                    "ratio",
                ],
                np.array(rows, dtype=float),
            )
        )
    return CommandResult(tables, summary)


def overlap(ctx: RunContext) -> CommandResult:
    config = ctx.config
    system = config.system()
    grid = config.grid(ctx.full)
    packets = config.wave_packets()
    moment = moment_vector(system)
    estimates = [
        overlap_magnetic(
            dimensionless_params(wp, system.omega0),
            moment,
            grid,
            direction=config.direction(),
            workers=ctx.workers,
        )
        for wp in packets
    ]
    distances = np.array([math.hypot(*wp.impact_offset) for wp in packets])
    magnitudes = np.array([abs(e.value) for e in estimates])
    return CommandResult(
        [
            Table.from_columns(
                "overlap",
                impact_distance=distances,
                rho=distances / packets[0].delta_r_perp,
                overlap_abs=magnitudes,
                overlap_re=[e.value.real for e in estimates],
                overlap_im=[e.value.imag for e in estimates],
                error=[e.error for e in estimates],
            )
        ],
        {"min_overlap_abs": float(np.min(magnitudes)), "samples": estimates[0].samples},
    )


def build_trajectory(kind: str, d: float, bunching: float) -> BeamTrajectory:
    if kind == "linear":
        return linear_trajectory(d)
    if kind == "circular_section":
        return circular_section_trajectory(d)
    relative = ModulatedCurrent(r_b=bunching, mean_current=1.0, omega0=1.0, v0=1.0)

    def current_profile(phases: np.ndarray) -> np.ndarray:
        return np.asarray(analytic_current(relative, 0.0, phases))

    return static_trajectory(d, 0.0, current_profile)


def rabi_profile_command(ctx: RunContext) -> CommandResult:
    config = ctx.config
    options = config.profile()
    system = config.system()
    trajectory = build_trajectory(options.trajectory, options.min_distance, options.bunching)
    positions = np.linspace(-options.span, options.span, options.n_positions)
    targets = np.column_stack([np.zeros_like(positions), positions])
    axis = (options.axis[0], options.axis[1])
    values = rabi_profile(
        trajectory, targets, options.harmonic, effective_moment(system), axis
    )
    summary: dict[str, Any] = {
        "trajectory": trajectory.name,
        "harmonic": options.harmonic,
        "peak_rabi_per_ampere": float(np.max(values)),
    }
    try:
        summary["fwhm"] = profile_fwhm(positions, values)
    except DomainError:
        summary["fwhm"] = None
    tail_from = options.tail_from or 0.25 * options.span
    tail = positions >= tail_from
    if np.count_nonzero(tail) >= 2 and np.all(values[tail] > 0):
        summary["tail_slope"] = loglog_slope(positions[tail], values[tail])

    optical = config.optical_system()
    if options.electric_loss and optical is not None:
        beam = config.tree["beam"]
        kin = kinematics_from_energy(options.kinetic_energy or beam["kinetic_energy"])
        peak = int(np.argmax(values))
        loss = electric_loss_per_flop(
            trajectory,
            (float(targets[peak, 0]), float(targets[peak, 1])),
            optical,
            kin,
            float(values[peak]),
            options.waist or beam["waist"],
            field_factor=dielectric_factor(options.refractive_index),
            hermite_nodes=options.hermite_nodes,
        )
        summary["electric_loss"] = {
            "electrons_per_flop": loss.electrons_per_flop,
            "mean_probability": loss.mean_probability,
            "no_excitation": loss.no_excitation,
        }
    return CommandResult(
        [Table.from_columns("rabi_profile", position=positions, rabi_per_ampere=values)],
        summary,
    )


def loss_estimate(ctx: RunContext) -> CommandResult:
    config = ctx.config
    spec = config.beam_spec()
    options = config.loss()
    system = config.system()
    density = options.density_fraction * gaussian_peak_current_density(
        spec.mean_current, spec.waist
    )
    t_grid = _time_grid(options.duration, options.n_times)
    fraction = np.array(
        [incoherent_loss_fraction(options.cross_section, density, t) for t in t_grid]
    )
    summary: dict[str, Any] = {
        "current_density": density,
        "final_fraction": float(fraction[-1]),
        "doppler_detuning_hz": doppler_detuning(
            options.atom_speed, system.omega0 / (2.0 * math.pi), spec.kinematics.velocity
        ),
    }
    recoil = options.recoil_momentum
    if recoil == 0.0 and config.has("wavepacket"):
        recoil = recoil_momentum_bound(config.wave_packets()[0].delta_r_perp)
    if recoil > 0:
        summary["lamb_dicke"] = lamb_dicke_bound(
            recoil,
            options.atom_mass_u * ATOMIC_MASS_UNIT,
            2.0 * math.pi * options.trap_frequency_hz,
        )
    return CommandResult([Table.from_columns("loss", t=t_grid, fraction=fraction)], summary)


def validity_only(ctx: RunContext) -> CommandResult:
    return CommandResult()


COMMANDS: dict[str, Command] = {
    command.name: command
    for command in (
        Command("kepler-current", kepler_current, "bunched current and its Fourier series"),
        Command("spectrum", spectrum, "shot-noise field trace and its spectrum"),
        Command(
            "bloch-mean", bloch_mean, "mean-field Bloch evolution", requires=("continuity",)
        ),
        Command(
            "bloch-shot", bloch_shot, "shot-noise damped Bloch evolution", requires=("continuity",)
        ),
        Command("bloch-spikes", bloch_spikes, "Bloch evolution driven by single electrons"),
        Command("probability", probability, "single-electron transition probabilities"),
        Command("overlap", overlap, "overlap of scattered and incoming electron packets"),
        Command("rabi-profile", rabi_profile_command, "Rabi frequency along a line of targets"),
        Command("loss-estimate", loss_estimate, "incoherent scattering loss and recoil bounds"),
        Command("validity", validity_only, "validity report only"),
    )
}
