"""Position-modulated beams and their spatially resolved Rabi profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from infra.errors import DomainError
from numerics.constants import HBAR, VACUUM_PERMEABILITY

PROFILE_SAMPLES = 1024

PositionFn = Callable[[np.ndarray], np.ndarray]
CurrentFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BeamTrajectory:
    """Beam-centre path over one modulation period.

    positions maps phases omega0 * t in [0, 2 pi) to an (n, 2) array of beam
    centres in metres. current_profile, when given, maps the same phases to
    the instantaneous current relative to its mean.
    """

    positions: PositionFn
    current_profile: CurrentFn | None = None
    name: str = "custom"

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        phases = 2.0 * math.pi * np.arange(n) / n
        centres = np.asarray(self.positions(phases), dtype=float)
        if centres.shape != (n, 2):
            raise ValueError("positions must return an (n, 2) array")
        if self.current_profile is None:
            weights = np.ones(n)
        else:
            weights = np.asarray(self.current_profile(phases), dtype=float)
        return phases, centres, weights


def static_trajectory(
    x: float, y: float, current_profile: CurrentFn | None = None
) -> BeamTrajectory:
    """Beam parked at (x, y), optionally with a temporally modulated current."""

    def positions(phases: np.ndarray) -> np.ndarray:
        return np.column_stack([np.full(phases.shape, x), np.full(phases.shape, y)])

    return BeamTrajectory(positions, current_profile, name="static")


def linear_trajectory(d: float) -> BeamTrajectory:
    """Beam swept along x as d (3 + 2 cos phase), never closer than d."""
    if d <= 0:
        raise ValueError("d must be positive")

    def positions(phases: np.ndarray) -> np.ndarray:
        return np.column_stack([d * (3.0 + 2.0 * np.cos(phases)), np.zeros(phases.shape)])

    return BeamTrajectory(positions, name="linear")


def circular_section_trajectory(d: float) -> BeamTrajectory:
    """Beam on a curved path (d (1 + sin^2/2), 2 d sin) grazing the origin at distance d."""
    if d <= 0:
        raise ValueError("d must be positive")

    def positions(phases: np.ndarray) -> np.ndarray:
        s = np.sin(phases)
        return np.column_stack([d * (1.0 + 0.5 * s * s), 2.0 * d * s])

    return BeamTrajectory(positions, name="circular_section")


def harmonic_field_amplitude(
    trajectory: BeamTrajectory,
    targets: np.ndarray,
    harmonic: int,
    axis: tuple[float, float] = (1.0, 0.0),
    n_samples: int = PROFILE_SAMPLES,
) -> np.ndarray:
    """Cosine amplitude (T per A) of the chosen field component at harmonic * omega0."""
    if harmonic not in (1, 2):
        raise DomainError("harmonic must be 1 or 2")
    if n_samples < PROFILE_SAMPLES:
        raise ValueError(f"n_samples must be at least {PROFILE_SAMPLES}")
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    phases, centres, weights = trajectory.sample(n_samples)
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)

    sep = pts[:, None, :] - centres[None, :, :]
    dist_sq = np.sum(sep * sep, axis=-1)
    scale = np.max(np.abs(centres)) + np.max(np.abs(pts)) + 1e-300
    if np.any(dist_sq <= (1e-12 * scale) ** 2):
        raise DomainError("target lies on the beam trajectory")

    # thin-beam field per ampere: mu0 / (2 pi |s|^2) * (s_y, -s_x)
    component = (sep[..., 1] * ax[0] - sep[..., 0] * ax[1]) / dist_sq
    field = VACUUM_PERMEABILITY / (2.0 * math.pi) * component * weights[None, :]
    coefficient = np.mean(field * np.exp(-1j * harmonic * phases)[None, :], axis=1)
    return 2.0 * np.abs(coefficient)


def rabi_profile(
    trajectory: BeamTrajectory,
    targets: np.ndarray,
    harmonic: int,
    moment: float,
    axis: tuple[float, float] = (1.0, 0.0),
    n_samples: int = PROFILE_SAMPLES,
) -> np.ndarray:
    """Rabi frequency per ampere (rad s^-1 A^-1) at each target position.

    moment is the effective transition moment in J/T that converts the
    resonant field amplitude into a matrix element.
    """
    amplitude = harmonic_field_amplitude(trajectory, targets, harmonic, axis, n_samples)
    return moment * amplitude / HBAR


def profile_fwhm(positions: np.ndarray, values: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked sampled profile."""
    x = np.asarray(positions, dtype=float)
    v = np.asarray(values, dtype=float)
    peak = int(np.argmax(v))
    half = 0.5 * v[peak]
    left = peak
    while left > 0 and v[left] > half:
        left -= 1
    right = peak
    while right < v.size - 1 and v[right] > half:
        right += 1
    if v[left] > half or v[right] > half:
        raise DomainError("profile does not fall to half maximum inside the sampled range")
    x_left = np.interp(half, [v[left], v[left + 1]], [x[left], x[left + 1]])
    x_right = np.interp(half, [v[right], v[right - 1]], [x[right], x[right - 1]])
    return float(x_right - x_left)


def loglog_slope(positions: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of log(values) against log(positions)."""
    x = np.asarray(positions, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(x <= 0) or np.any(v <= 0):
        raise DomainError("log-log fit needs positive positions and values")
    slope, _ = np.polyfit(np.log(x), np.log(v), 1)
    return float(slope)
