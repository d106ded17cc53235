"""Random-walk phase noise of the beam modulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from infra.errors import DomainError
from numerics.rng import RngStream

# per-step phase standard deviation when the path is laid on its own grid
MAX_PHASE_STEP = 0.01


@dataclass(frozen=True)
class PhaseNoisePath:
    """Modulation phase sampled at increasing times, linear in between."""

    times: np.ndarray
    phases: np.ndarray

    def __post_init__(self) -> None:
        if self.times.shape != self.phases.shape or self.times.ndim != 1:
            raise ValueError("times and phases must be 1-D arrays of equal length")
        if self.times.size == 0:
            raise ValueError("phase noise path must not be empty")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("times must be non-decreasing")

    def at(self, t: np.ndarray | float) -> np.ndarray:
        """Phase at t; times outside the sampled span raise DomainError."""
        query = np.asarray(t, dtype=float)
        if query.size and (query.min() < self.times[0] or query.max() > self.times[-1]):
            raise DomainError(
                f"phase noise sampled on [{self.times[0]:.6g}, {self.times[-1]:.6g}] s only"
            )
        return np.interp(query, self.times, self.phases)

    def shifted(self, dt: float, dphi: float = 0.0) -> PhaseNoisePath:
        return PhaseNoisePath(self.times + dt, self.phases + dphi)


def silent_path(t_start: float = 0.0, t_end: float = 1.0) -> PhaseNoisePath:
    """A noise-free path (phi = 0 everywhere)."""
    return PhaseNoisePath(np.array([t_start, t_end]), np.zeros(2))


def sample_phase_noise(
    times: np.ndarray, b: float, rng: RngStream, phi0: float = 0.0
) -> PhaseNoisePath:
    """Wiener phase with Var(phi(a) - phi(b)) = 2 b |a - b|."""
    if b < 0:
        raise ValueError("b must be non-negative")
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValueError("times must not be empty")
    steps = np.diff(t)
    if np.any(steps < 0):
        raise ValueError("times must be non-decreasing")
    increments = np.sqrt(2.0 * b * steps) * rng.generator().standard_normal(steps.size)
    phases = phi0 + np.concatenate([[0.0], np.cumsum(increments)])
    return PhaseNoisePath(t, phases)


def phase_noise_on_grid(
    t_start: float, t_end: float, b: float, rng: RngStream
) -> PhaseNoisePath:
    """Noise path on a grid fine enough that each step moves phi by <= 0.01 rad rms."""
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    if b == 0:
        return silent_path(t_start, t_end)
    step = min((t_end - t_start) / 16.0, MAX_PHASE_STEP**2 / (2.0 * b))
    count = int(math.ceil((t_end - t_start) / step)) + 1
    return sample_phase_noise(np.linspace(t_start, t_end, count), b, rng)
