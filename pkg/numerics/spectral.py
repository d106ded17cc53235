"""Discrete Fourier transform pinned to the continuous-transform normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from infra.errors import DomainError

CONVENTION = "dt/sqrt(2pi) * sum s(t_k) exp(+i omega t_k)"

_UNIFORM_RTOL = 1e-9


class UniformSeries(Protocol):
    samples: np.ndarray
    dt: float
    t_start: float


@dataclass(frozen=True)
class Spectrum:
    """Complex spectrum on a uniform, increasing angular-frequency grid."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    convention_note: str = CONVENTION

    def __post_init__(self) -> None:
        if self.frequencies.shape != self.amplitudes.shape:
            raise ValueError("frequencies and amplitudes must have the same length")

    @property
    def d_omega(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def bin_of(self, omega: float) -> int:
        """Index of the bin closest to the angular frequency omega."""
        return int(np.argmin(np.abs(self.frequencies - omega)))


def uniform_step(times: Sequence[float] | np.ndarray) -> float:
    """Return the sampling step, rejecting non-uniform sampling."""
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        raise DomainError("at least two samples are required")
    steps = np.diff(t)
    dt = float(np.mean(steps))
    if dt <= 0 or np.max(np.abs(steps - dt)) > _UNIFORM_RTOL * max(dt, abs(t[-1])):
        raise DomainError("sampling must be uniform and increasing")
    return dt


def dft_samples(samples: np.ndarray, dt: float, t_start: float = 0.0) -> Spectrum:
    """Transform uniformly sampled values starting at t_start with step dt."""
    s = np.asarray(samples)
    n = s.size
    if n < 2:
        raise DomainError("at least two samples are required")
    if not dt > 0:
        raise DomainError("dt must be positive")
    omega = 2.0 * math.pi * np.fft.fftfreq(n, d=dt)
    # n * ifft gives sum_k s_k exp(+2 pi i m k / n)
    raw = n * np.fft.ifft(s)
    amplitudes = (dt / math.sqrt(2.0 * math.pi)) * np.exp(1j * omega * t_start) * raw
    return Spectrum(
        frequencies=np.fft.fftshift(omega),
        amplitudes=np.fft.fftshift(amplitudes),
    )


def dft(trace: UniformSeries) -> Spectrum:
    """Spectrum of a field trace in the continuous-transform convention."""
    return dft_samples(trace.samples, trace.dt, trace.t_start)


def dft_times(times: Sequence[float] | np.ndarray, samples: np.ndarray) -> Spectrum:
    """Spectrum of explicitly time-stamped samples; the stamps must be uniform."""
    dt = uniform_step(times)
    return dft_samples(samples, dt, float(np.asarray(times, dtype=float)[0]))


def parseval_check(samples: np.ndarray, dt: float, spectrum: Spectrum) -> float:
    """Relative mismatch between time-domain and frequency-domain energy."""
    energy_t = float(np.sum(np.abs(samples) ** 2) * dt)
    energy_w = float(np.sum(np.abs(spectrum.amplitudes) ** 2) * spectrum.d_omega)
    if energy_t == 0.0:
        return abs(energy_w)
    return abs(energy_t - energy_w) / energy_t
