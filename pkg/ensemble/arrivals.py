"""Electron emission times and transverse positions."""

from __future__ import annotations

import math

import numpy as np

from numerics.constants import ELEMENTARY_CHARGE
from numerics.rng import RngStream

DEFAULT_TRUNCATION_WAISTS = 5.0


def electrons_per_period(mean_current: float, omega0: float) -> float:
    """Mean number of electrons passing during one modulation period."""
    return mean_current / ELEMENTARY_CHARGE * 2.0 * math.pi / omega0


def sample_arrivals(
    mean_current: float,
    duration: float,
    rng: RngStream,
    t_start: float = 0.0,
) -> np.ndarray:
    """Sorted emission times of a homogeneous Poisson process with rate I0/e."""
    if mean_current <= 0:
        raise ValueError("mean_current must be positive")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    gen = rng.generator()
    expected = mean_current * duration / ELEMENTARY_CHARGE
    count = int(gen.poisson(expected))
    times = t_start + duration * gen.random(count)
    times.sort()
    return times


def regular_arrivals(
    mean_current: float, duration: float, t_start: float = 0.0
) -> np.ndarray:
    """Noise-free emission grid with spacing e / I0, offset by half a spacing."""
    if mean_current <= 0:
        raise ValueError("mean_current must be positive")
    spacing = ELEMENTARY_CHARGE / mean_current
    count = int(math.floor(duration / spacing + 1e-9))
    return t_start + spacing * (np.arange(count) + 0.5)


def transverse_radius(u: np.ndarray | float, waist: float, r_max: float) -> np.ndarray:
    """Inverse CDF of the truncated Gaussian radius with sigma = w / 2."""
    if waist <= 0 or r_max <= 0:
        raise ValueError("waist and r_max must be positive")
    uu = np.asarray(u, dtype=float)
    tail = -math.expm1(-2.0 * r_max * r_max / (waist * waist))
    return waist / math.sqrt(2.0) * np.sqrt(-np.log1p(-uu * tail))


def sample_transverse(
    waist: float,
    rng: RngStream,
    count: int,
    r_max: float | None = None,
) -> np.ndarray:
    """(count, 2) transverse offsets from the beam axis with uniform azimuth."""
    if count < 0:
        raise ValueError("count must be non-negative")
    limit = DEFAULT_TRUNCATION_WAISTS * waist if r_max is None else r_max
    gen = rng.generator()
    radius = transverse_radius(gen.random(count), waist, limit)
    azimuth = 2.0 * math.pi * gen.random(count)
    return np.column_stack([radius * np.cos(azimuth), radius * np.sin(azimuth)])
