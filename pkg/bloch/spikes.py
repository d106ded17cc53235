"""Bloch dynamics driven by individual electron field pulses.

Each electron acts during a short window around its closest approach. Inside
a window the rotating-frame equations are integrated with the full
oscillatory coupling; between windows the state relaxes analytically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from beam.klystron import BeamSpec
from bloch.drive import linewidth_to_b, transition_moment
from bloch.state import BlochState, BlochTrajectory, average_trajectories
from ensemble.drift import ElectronTrain, empty_train, generate_train
from ensemble.phase_noise import phase_noise_on_grid
from ensemble.trace import TraceGeometry, electron_geometry, pulse_field
from infra.errors import ConvergenceError, ValidityError
from infra.parallel import ordered_map
from interaction.two_level import TwoLevelSystem
from numerics.constants import HBAR
from numerics.rng import RngStream

logger = logging.getLogger("klystron")

# window half-width in pulse widths R / (gamma v)
WINDOW_HALF_WIDTHS = 5.0
# restores the pulse area cut off outside the window
_AREA_CORRECTION = math.sqrt(1.0 + WINDOW_HALF_WIDTHS**2) / WINDOW_HALF_WIDTHS
DEFAULT_SUBSTEPS = 64
DEFAULT_REALIZATIONS = 12
PROPAGATOR_TOL = 1e-10
MAX_SUBSTEP_DOUBLINGS = 4
_BATCH_WINDOWS = 20_000


@dataclass(frozen=True)
class SpikeWindows:
    """Merged interaction windows with the electrons they contain."""

    starts: np.ndarray
    ends: np.ndarray
    members: list[np.ndarray]


def free_evolution(state: BlochState, dt: float, gamma1: float, gamma2: float) -> BlochState:
    """Exact relaxation over dt with no drive."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    decay = math.exp(-gamma1 * dt)
    ee = state.rho_ee * decay
    return BlochState(ee, state.rho_gg + state.rho_ee - ee, state.rho_eg * math.exp(-gamma2 * dt))


def _free_matrices(gaps: np.ndarray, gamma1: float, gamma2: float) -> np.ndarray:
    e1 = np.exp(-gamma1 * gaps)
    e2 = np.exp(-gamma2 * gaps)
    mats = np.zeros((gaps.size, 4, 4), dtype=complex)
    mats[:, 0, 0] = e2
    mats[:, 1, 1] = e2
    mats[:, 2, 2] = e1
    mats[:, 3, 2] = 1.0 - e1
    mats[:, 3, 3] = 1.0
    return mats


def merge_windows(train: ElectronTrain, d: float, max_length: float | None = None) -> SpikeWindows:
    """Interaction windows t_j +- 5 R_j / (gamma v_j), overlapping ones merged."""
    if len(train) == 0:
        return SpikeWindows(np.empty(0), np.empty(0), [])
    _, dist_sq, gamma_v = electron_geometry(train, d)
    half = WINDOW_HALF_WIDTHS * np.sqrt(dist_sq) / gamma_v
    lo = train.t_arrive - half
    hi = train.t_arrive + half
    # running maximum of window ends decides where a new cluster starts
    running_hi = np.maximum.accumulate(hi)
    breaks = np.nonzero(lo[1:] > running_hi[:-1])[0] + 1
    first = np.concatenate([[0], breaks])
    last = np.concatenate([breaks, [len(train)]])
    starts = lo[first]
    ends = np.array([running_hi[stop - 1] for stop in last])
    members = [np.arange(a, b) for a, b in zip(first, last)]
    if max_length is not None and np.any(ends - starts > max_length):
        raise ValidityError(
            "spike_window", "merged interaction window is longer than a modulation period"
        )
    return SpikeWindows(starts, ends, members)


def _generators(
    times: np.ndarray,
    couplings: np.ndarray,
    omega0: float,
    gamma1: float,
    gamma2: float,
) -> np.ndarray:
    """Rotating-frame generators for c = T_ge / hbar at the given times, shape (..., 4, 4)."""
    up = np.exp(1j * omega0 * times)
    down = np.conj(up)
    gen = np.zeros(times.shape + (4, 4), dtype=complex)
    ic = 1j * couplings
    gen[..., 0, 0] = -gamma2
    gen[..., 1, 1] = -gamma2
    gen[..., 0, 2] = ic * up
    gen[..., 0, 3] = -ic * up
    gen[..., 1, 2] = -ic * down
    gen[..., 1, 3] = ic * down
    gen[..., 2, 0] = ic * down
    gen[..., 2, 1] = -ic * up
    gen[..., 2, 2] = -gamma1
    gen[..., 3, 0] = -ic * down
    gen[..., 3, 1] = ic * up
    gen[..., 3, 2] = gamma1
    return gen


def _rk4_propagators(
    system: TwoLevelSystem,
    train: ElectronTrain,
    d: float,
    starts: np.ndarray,
    ends: np.ndarray,
    members: list[np.ndarray],
    substeps: int,
) -> np.ndarray:
    """Fixed-step RK4 propagators of a batch of windows, shape (n, 4, 4)."""
    n = starts.size
    lever_all, dist_sq_all, gamma_v_all = electron_geometry(train, d)
    width = max(len(m) for m in members)
    # pad every window to the same member count; padded slots carry zero lever
    lever = np.zeros((n, width))
    dist_sq = np.ones((n, width))
    gamma_v = np.ones((n, width))
    arrive = np.zeros((n, width))
    for row, idx in enumerate(members):
        k = idx.size
        lever[row, :k] = lever_all[idx]
        dist_sq[row, :k] = dist_sq_all[idx]
        gamma_v[row, :k] = gamma_v_all[idx]
        arrive[row, :k] = train.t_arrive[idx]
    scale = train.weight * _AREA_CORRECTION

    def coupling(t: np.ndarray) -> np.ndarray:
        field = pulse_field(lever, dist_sq, gamma_v, t[:, None] - arrive).sum(axis=1)
        return np.asarray(transition_moment(system, scale * field)) / HBAR

    def generator(t: np.ndarray) -> np.ndarray:
        return _generators(t, coupling(t), system.omega0, system.gamma1, system.gamma2)

    h = (ends - starts) / substeps
    prop = np.broadcast_to(np.eye(4, dtype=complex), (n, 4, 4)).copy()
    hh = h[:, None, None]
    for step in range(substeps):
        t = starts + step * h
        a1 = generator(t)
        a2 = generator(t + 0.5 * h)
        a3 = generator(t + h)
        k1 = a1 @ prop
        k2 = a2 @ (prop + 0.5 * hh * k1)
        k3 = a2 @ (prop + 0.5 * hh * k2)
        k4 = a3 @ (prop + hh * k3)
        prop = prop + hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return prop


def window_propagators(
    system: TwoLevelSystem,
    train: ElectronTrain,
    geometry: TraceGeometry,
    windows: SpikeWindows,
    substeps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """Propagators of all windows, refined until the half-step comparison converges."""
    n = windows.starts.size
    out = np.empty((n, 4, 4), dtype=complex)
    d = geometry.impact_distance
    for lo in range(0, n, _BATCH_WINDOWS):
        sl = slice(lo, min(n, lo + _BATCH_WINDOWS))
        members = windows.members[sl]
        steps = substeps
        coarse = _rk4_propagators(
            system, train, d, windows.starts[sl], windows.ends[sl], members, steps
        )
        for _ in range(MAX_SUBSTEP_DOUBLINGS + 1):
            fine = _rk4_propagators(
                system, train, d, windows.starts[sl], windows.ends[sl], members, 2 * steps
            )
            error = float(np.max(np.abs(fine - coarse))) / 15.0
            if error <= PROPAGATOR_TOL:
                break
            coarse = fine
            steps *= 2
        else:
            raise ConvergenceError(
                "window propagators did not converge", error_estimate=error
            )
        out[sl] = fine
    return out


def integrate_spike_train(
    system: TwoLevelSystem,
    train: ElectronTrain,
    geometry: TraceGeometry,
    rho0: BlochState,
    t_grid: np.ndarray,
    substeps: int = DEFAULT_SUBSTEPS,
) -> BlochTrajectory:
    """One realization on t_grid; grid times inside a window see the state before it."""
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise ValueError("t_grid must be a non-empty non-decreasing 1-D array")
    rho0.validate()
    t0 = float(times[0])
    inside = (train.t_arrive >= t0) & (train.t_arrive <= times[-1])
    if not np.all(inside):
        keep = np.nonzero(inside)[0]
        train = ElectronTrain(
            train.t_emit[keep],
            train.t_arrive[keep],
            train.offsets[keep],
            train.velocity[keep],
            train.weight,
        )
    period = 2.0 * math.pi / system.omega0
    windows = merge_windows(train, geometry.impact_distance, max_length=period)
    logger.debug(
        "spike windows merged",
        extra={
            "event_type": "spikes",
            "metadata": {"electrons": len(train), "windows": int(windows.starts.size)},
        },
    )

    n_win = windows.starts.size
    states = np.empty((n_win + 1, 4), dtype=complex)
    states[0] = rho0.vector()
    last_end = np.concatenate([[t0], windows.ends])
    if n_win:
        props = window_propagators(system, train, geometry, windows, substeps)
        gaps = np.maximum(windows.starts - last_end[:-1], 0.0)
        steps = props @ _free_matrices(gaps, system.gamma1, system.gamma2)
        for k in range(n_win):
            states[k + 1] = steps[k] @ states[k]

    # state after the last window that finished by each grid time
    index = np.searchsorted(windows.ends, times, side="right")
    gap = np.maximum(times - last_end[index], 0.0)
    free = _free_matrices(gap, system.gamma1, system.gamma2)
    vectors = np.einsum("nij,nj->in", free, states[index])
    return BlochTrajectory.from_vectors(times, vectors)


def solve_spike_train(
    system: TwoLevelSystem,
    trains: list[ElectronTrain],
    geometry: TraceGeometry,
    rho0: BlochState,
    t_grid: np.ndarray,
    workers: int = 1,
    substeps: int = DEFAULT_SUBSTEPS,
) -> BlochTrajectory:
    """Average of integrate_spike_train over realizations, reduced in list order."""
    if not trains:
        return integrate_spike_train(system, empty_train(), geometry, rho0, t_grid, substeps)
    results = ordered_map(
        lambda train: integrate_spike_train(system, train, geometry, rho0, t_grid, substeps),
        trains,
        workers,
    )
    return average_trajectories(results)


def spike_realizations(
    spec: BeamSpec,
    rng: RngStream,
    duration: float,
    n_realizations: int = DEFAULT_REALIZATIONS,
    electrons_per_sample: float = 1.0,
    workers: int = 1,
) -> list[ElectronTrain]:
    """Independent electron trains with fresh phase noise, arrivals shifted to start at 0.

    Realization r draws its noise from rng.derive(r).derive(0) and its
    electrons from rng.derive(r).derive(1).
    """
    if n_realizations <= 0:
        raise ValueError("n_realizations must be positive")
    transit = spec.drift_length / spec.kinematics.velocity
    period = spec.period
    b = linewidth_to_b(spec.linewidth)

    def build(r: int) -> ElectronTrain:
        stream = rng.derive(r)
        t_lo, t_hi = -period, duration + period
        noise = phase_noise_on_grid(t_lo, t_hi, b, stream.derive(0))
        train = generate_train(
            spec,
            t_lo,
            t_hi - t_lo,
            stream.derive(1),
            noise=noise,
            electrons_per_sample=electrons_per_sample,
            chunk_duration=max(period, (t_hi - t_lo) / 16.0),
        )
        return train.shifted(-transit)

    return ordered_map(build, range(n_realizations), workers)
