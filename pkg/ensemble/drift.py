"""Velocity modulation and exact relativistic drift of emitted electrons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from beam.klystron import BeamSpec, bunching_parameter
from ensemble.arrivals import regular_arrivals, sample_arrivals, sample_transverse
from ensemble.phase_noise import PhaseNoisePath
from infra.errors import OvertakingError
from infra.parallel import ordered_map
from numerics.constants import ELECTRON_REST_ENERGY_EV, SPEED_OF_LIGHT
from numerics.rng import RngStream


@dataclass(frozen=True)
class ElectronSample:
    t_emit: float
    t_arrive: float
    offset: tuple[float, float]
    velocity: float


@dataclass(frozen=True)
class ElectronTrain:
    """Column-wise electron samples ordered by arrival time.

    weight is the number of physical electrons each sample stands for.
    """

    t_emit: np.ndarray
    t_arrive: np.ndarray
    offsets: np.ndarray
    velocity: np.ndarray
    weight: float = 1.0

    def __post_init__(self) -> None:
        n = self.t_emit.shape[0]
        if self.t_arrive.shape != (n,) or self.velocity.shape != (n,):
            raise ValueError("electron columns must have equal length")
        if self.offsets.shape != (n, 2):
            raise ValueError("offsets must be an (n, 2) array")
        if self.weight <= 0:
            raise ValueError("weight must be positive")

    def __len__(self) -> int:
        return int(self.t_emit.shape[0])

    def __getitem__(self, index: int) -> ElectronSample:
        return ElectronSample(
            t_emit=float(self.t_emit[index]),
            t_arrive=float(self.t_arrive[index]),
            offset=(float(self.offsets[index, 0]), float(self.offsets[index, 1])),
            velocity=float(self.velocity[index]),
        )

    def shifted(self, dt: float) -> ElectronTrain:
        return ElectronTrain(
            self.t_emit + dt, self.t_arrive + dt, self.offsets, self.velocity, self.weight
        )


def empty_train(weight: float = 1.0) -> ElectronTrain:
    return ElectronTrain(
        np.empty(0), np.empty(0), np.empty((0, 2)), np.empty(0), weight
    )


def concatenate_trains(trains: list[ElectronTrain]) -> ElectronTrain:
    """Join chunk trains in the given order, rejecting order inversions at the seams."""
    parts = [train for train in trains if len(train)]
    if not parts:
        return empty_train(trains[0].weight if trains else 1.0)
    weights = {train.weight for train in parts}
    if len(weights) != 1:
        raise ValueError("trains must share one sample weight")
    merged = ElectronTrain(
        np.concatenate([train.t_emit for train in parts]),
        np.concatenate([train.t_arrive for train in parts]),
        np.concatenate([train.offsets for train in parts]),
        np.concatenate([train.velocity for train in parts]),
        parts[0].weight,
    )
    _check_order(merged.t_arrive)
    return merged


def speed_from_energy(kinetic_energy_ev: np.ndarray) -> np.ndarray:
    """Vectorized exact relativistic speed for kinetic energies in eV."""
    ratio = np.asarray(kinetic_energy_ev, dtype=float) / ELECTRON_REST_ENERGY_EV
    gamma = 1.0 + ratio
    return SPEED_OF_LIGHT * np.sqrt(ratio * (2.0 + ratio)) / gamma


def _check_order(arrivals: np.ndarray) -> None:
    if arrivals.size > 1 and np.any(np.diff(arrivals) <= 0):
        first = int(np.argmax(np.diff(arrivals) <= 0))
        raise OvertakingError(
            f"arrival order inverted after electron {first} "
            f"(t={arrivals[first]:.12g} s)"
        )


def modulate_and_drift(
    emissions: np.ndarray,
    spec: BeamSpec,
    noise: PhaseNoisePath | None = None,
    offsets: np.ndarray | None = None,
    weight: float = 1.0,
) -> ElectronTrain:
    """Modulate each electron's energy at emission and propagate it over the drift.

    E(t1) = E0 + dE sin(omega0 t1 + phi(t1)) and t2 = t1 + l / v(E(t1)) with
    the exact relativistic speed.
    """
    bunching_parameter(spec)
    t_emit = np.asarray(emissions, dtype=float)
    kin = spec.kinematics
    phase = spec.mod_angular_freq * t_emit
    if noise is not None:
        phase = phase + noise.at(t_emit)
    energy = kin.kinetic_energy * (1.0 + spec.mod_depth * np.sin(phase))
    velocity = speed_from_energy(energy)
    t_arrive = t_emit + spec.drift_length / velocity
    _check_order(t_arrive)
    if offsets is None:
        offsets = np.zeros((t_emit.size, 2))
    return ElectronTrain(t_emit, t_arrive, np.asarray(offsets, dtype=float), velocity, weight)


def generate_train(
    spec: BeamSpec,
    t_start: float,
    duration: float,
    rng: RngStream,
    *,
    noise: PhaseNoisePath | None = None,
    chunk_duration: float | None = None,
    workers: int = 1,
    electrons_per_sample: float = 1.0,
    transverse: bool = True,
    r_max: float | None = None,
    regular: bool = False,
) -> ElectronTrain:
    """Emit, offset and drift electrons over [t_start, t_start + duration).

    Emission is split into fixed time chunks; chunk k draws from rng.derive(k)
    so the result does not depend on the worker count.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if electrons_per_sample < 1:
        raise ValueError("electrons_per_sample must be at least 1")
    chunk = duration if chunk_duration is None else chunk_duration
    if chunk <= 0:
        raise ValueError("chunk_duration must be positive")
    n_chunks = max(1, int(math.ceil(duration / chunk - 1e-9)))
    sample_current = spec.mean_current / electrons_per_sample

    def build(index: int) -> ElectronTrain:
        start = t_start + index * chunk
        length = min(chunk, t_start + duration - start)
        stream = rng.derive(index)
        if regular:
            emissions = regular_arrivals(sample_current, length, start)
        else:
            emissions = sample_arrivals(sample_current, length, stream.derive(0), start)
        offsets = None
        if transverse:
            offsets = sample_transverse(spec.waist, stream.derive(1), emissions.size, r_max)
        return modulate_and_drift(emissions, spec, noise, offsets, electrons_per_sample)

    trains = ordered_map(build, range(n_chunks), workers)
    return concatenate_trains(trains)
