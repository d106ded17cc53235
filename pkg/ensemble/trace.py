"""Magnetic field time series of an electron train at a fixed target.

The target sits at the origin and the beam axis passes at (d, 0), so an
electron with transverse offset (x, y) from the axis is at (d + x, y) and
its field at the target points along +y with magnitude
mu0 e gamma v (d + x) / (4 pi (R^2 + gamma^2 v^2 (t - t_j)^2)^(3/2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from beam.klystron import BeamSpec
from ensemble.arrivals import electrons_per_period
from ensemble.drift import ElectronTrain, generate_train
from ensemble.phase_noise import PhaseNoisePath
from infra.errors import OvertakingError
from infra.parallel import ordered_map
from numerics.constants import ELEMENTARY_CHARGE, SPEED_OF_LIGHT, VACUUM_PERMEABILITY
from numerics.rng import RngStream

DepositMode = Literal["auto", "pulse", "impulse"]

PULSE_SUPPORT_WIDTHS = 10.0
MIN_SAMPLES_PER_PERIOD = 32
# pulse sampling is chosen when dt resolves the narrowest pulse this finely
AUTO_PULSE_RESOLUTION = 4.0
DEFAULT_CHUNK_ELECTRONS = 200_000
_PULSE_BATCH_CELLS = 4_000_000
BLOCK_ELECTRONS = 2_000_000


@dataclass(frozen=True)
class TraceGeometry:
    impact_distance: float

    def __post_init__(self) -> None:
        if self.impact_distance <= 0:
            raise ValueError("impact_distance must be positive")


@dataclass(frozen=True)
class FieldTrace:
    """Uniformly sampled B_y at the target.

    electron_count is the number of physical electrons whose arrival falls
    inside the trace window, used by the shot-noise floor.
    """

    samples: np.ndarray
    dt: float
    t_start: float
    seed: RngStream | None = None
    config_digest: str = ""
    modulation_period: float | None = None
    electron_count: float = 0.0
    impact_distance: float = 0.0
    pulse_width: float = 0.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.modulation_period is not None:
            if self.modulation_period / self.dt < MIN_SAMPLES_PER_PERIOD * (1 - 1e-9):
                raise ValueError(
                    f"dt must give at least {MIN_SAMPLES_PER_PERIOD} samples per period"
                )

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * self.samples.size


def _gamma_v(velocity: np.ndarray) -> np.ndarray:
    beta = velocity / SPEED_OF_LIGHT
    return velocity / np.sqrt((1.0 - beta) * (1.0 + beta))


def electron_geometry(
    train: ElectronTrain, d: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lever = d + train.offsets[:, 0]
    dist_sq = lever * lever + train.offsets[:, 1] ** 2
    return lever, dist_sq, _gamma_v(train.velocity)


def pulse_field(
    lever: np.ndarray, dist_sq: np.ndarray, gamma_v: np.ndarray, tau: np.ndarray
) -> np.ndarray:
    """B_y of single electrons at time offsets tau from closest approach."""
    denom = (dist_sq + (gamma_v * tau) ** 2) ** 1.5
    return VACUUM_PERMEABILITY * ELEMENTARY_CHARGE * gamma_v * lever / (4.0 * math.pi * denom)


def pulse_area(lever: np.ndarray, dist_sq: np.ndarray) -> np.ndarray:
    """Time integral of the single-electron B_y pulse, mu0 e (d + x) / (2 pi R^2)."""
    return VACUUM_PERMEABILITY * ELEMENTARY_CHARGE * lever / (2.0 * math.pi * dist_sq)


def _deposit_impulse(
    train: ElectronTrain, d: float, t_start: float, dt: float, n: int
) -> np.ndarray:
    lever, dist_sq, _ = electron_geometry(train, d)
    bins = np.floor((train.t_arrive - t_start) / dt + 0.5).astype(np.int64)
    inside = (bins >= 0) & (bins < n)
    values = train.weight * pulse_area(lever[inside], dist_sq[inside]) / dt
    return np.bincount(bins[inside], weights=values, minlength=n)


def _deposit_pulses(
    train: ElectronTrain, d: float, t_start: float, dt: float, n: int
) -> np.ndarray:
    lever, dist_sq, gamma_v = electron_geometry(train, d)
    half = PULSE_SUPPORT_WIDTHS * np.sqrt(dist_sq) / gamma_v
    lo = np.ceil((train.t_arrive - half - t_start) / dt).astype(np.int64)
    hi = np.floor((train.t_arrive + half - t_start) / dt).astype(np.int64)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, n - 1)
    keep = hi >= lo
    buffer = np.zeros(n)
    if not np.any(keep):
        return buffer
    idx = np.nonzero(keep)[0]
    span = int(np.max(hi[idx] - lo[idx])) + 1
    batch = max(1, _PULSE_BATCH_CELLS // span)
    offsets = np.arange(span)
    for start in range(0, idx.size, batch):
        sel = idx[start : start + batch]
        cells = lo[sel, None] + offsets[None, :]
        valid = cells <= hi[sel, None]
        tau = t_start + cells * dt - train.t_arrive[sel, None]
        values = pulse_field(
            lever[sel, None], dist_sq[sel, None], gamma_v[sel, None], tau
        )
        buffer += np.bincount(
            cells[valid], weights=train.weight * values[valid], minlength=n
        )
    return buffer


def choose_mode(train: ElectronTrain, d: float, dt: float, mode: DepositMode) -> str:
    if mode not in ("auto", "pulse", "impulse"):
        raise ValueError(f"unknown deposit mode {mode!r}")
    if mode != "auto":
        return mode
    if len(train) == 0:
        return "impulse"
    width = d / float(np.max(_gamma_v(train.velocity)))
    return "pulse" if dt * AUTO_PULSE_RESOLUTION <= width else "impulse"


def _accumulate(
    train: ElectronTrain,
    d: float,
    t_start: float,
    dt: float,
    n: int,
    mode: str,
    chunk_electrons: int,
    workers: int,
) -> np.ndarray:
    deposit = _deposit_pulses if mode == "pulse" else _deposit_impulse
    bounds = list(range(0, len(train), chunk_electrons))

    def run(start: int) -> np.ndarray:
        stop = start + chunk_electrons
        part = ElectronTrain(
            train.t_emit[start:stop],
            train.t_arrive[start:stop],
            train.offsets[start:stop],
            train.velocity[start:stop],
            train.weight,
        )
        return deposit(part, d, t_start, dt, n)

    total = np.zeros(n)
    for buffer in ordered_map(run, bounds, workers):
        total += buffer
    return total


def _window_count(train: ElectronTrain, t_start: float, t_end: float) -> float:
    inside = (train.t_arrive >= t_start) & (train.t_arrive < t_end)
    return float(np.count_nonzero(inside)) * train.weight


def synthesize_trace(
    train: ElectronTrain,
    geometry: TraceGeometry,
    t_start: float,
    duration: float,
    dt: float,
    *,
    mode: DepositMode = "auto",
    modulation_period: float | None = None,
    seed: RngStream | None = None,
    config_digest: str = "",
    chunk_electrons: int = DEFAULT_CHUNK_ELECTRONS,
    workers: int = 1,
) -> FieldTrace:
    """Sample B_y on t_start + k dt for k < duration / dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration <= 0:
        raise ValueError("duration must be positive")
    if chunk_electrons <= 0:
        raise ValueError("chunk_electrons must be positive")
    n = int(round(duration / dt))
    d = geometry.impact_distance
    chosen = choose_mode(train, d, dt, mode)
    samples = _accumulate(train, d, t_start, dt, n, chosen, chunk_electrons, workers)
    width = d / float(np.max(_gamma_v(train.velocity))) if len(train) else 0.0
    return FieldTrace(
        samples=samples,
        dt=dt,
        t_start=t_start,
        seed=seed,
        config_digest=config_digest,
        modulation_period=modulation_period,
        electron_count=_window_count(train, t_start - 0.5 * dt, t_start + (n - 0.5) * dt),
        impact_distance=d,
        pulse_width=width,
    )


def synthesize_beam_trace(
    spec: BeamSpec,
    rng: RngStream,
    n_periods: int,
    samples_per_period: int = MIN_SAMPLES_PER_PERIOD,
    *,
    noise: PhaseNoisePath | None = None,
    mode: DepositMode = "auto",
    periods_per_chunk: int | None = None,
    workers: int = 1,
    config_digest: str = "",
) -> FieldTrace:
    """Stream a bunched beam through the drift and record n_periods of B_y.

    Electrons are generated in blocks of periods_per_chunk periods from
    rng.derive(block) and deposited block by block, so the full electron
    list never has to be held in memory.
    """
    if n_periods <= 0:
        raise ValueError("n_periods must be positive")
    if samples_per_period < MIN_SAMPLES_PER_PERIOD:
        raise ValueError(f"samples_per_period must be at least {MIN_SAMPLES_PER_PERIOD}")
    period = spec.period
    dt = period / samples_per_period
    transit = spec.drift_length / spec.kinematics.velocity
    t_start = transit
    duration = n_periods * period
    # arrivals move by less than one period away from the unmodulated transit
    emit_start = -period
    emit_end = duration + period
    if periods_per_chunk is None:
        per_period = electrons_per_period(spec.mean_current, spec.mod_angular_freq)
        periods_per_chunk = max(1, int(BLOCK_ELECTRONS // max(per_period, 1.0)))
    block = periods_per_chunk * period
    n_blocks = int(math.ceil((emit_end - emit_start) / block - 1e-9))
    n = n_periods * samples_per_period
    d = spec.impact_distance

    total = np.zeros(n)
    count = 0.0
    width = d / (spec.kinematics.gamma * spec.kinematics.velocity)
    last_arrival = -math.inf
    for index in range(n_blocks):
        start = emit_start + index * block
        length = min(block, emit_end - start)
        train = generate_train(
            spec, start, length, rng.derive(index), noise=noise, workers=workers
        )
        if len(train) == 0:
            continue
        if train.t_arrive[0] <= last_arrival:
            raise OvertakingError(f"arrival order inverted at block {index} boundary")
        last_arrival = float(train.t_arrive[-1])
        chosen = choose_mode(train, d, dt, mode)
        total += _accumulate(
            train, d, t_start, dt, n, chosen, DEFAULT_CHUNK_ELECTRONS, workers
        )
        count += _window_count(train, t_start - 0.5 * dt, t_start + (n - 0.5) * dt)

    return FieldTrace(
        samples=total,
        dt=dt,
        t_start=t_start,
        seed=rng,
        config_digest=config_digest,
        modulation_period=period,
        electron_count=count,
        impact_distance=d,
        pulse_width=width,
    )

