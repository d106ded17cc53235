"""Spectral statistics of synthesized traces: harmonics, shot-noise floor, SNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from beam.klystron import BeamSpec, bunching_parameter
from ensemble.trace import FieldTrace
from infra.errors import DomainError
from numerics.constants import ELEMENTARY_CHARGE, VACUUM_PERMEABILITY
from numerics.spectral import Spectrum, dft

MIN_FLOOR_PERIODS = 100
GUARD_BINS = 2
# keep the floor estimate where the single-electron pulse still looks like a delta
FLAT_SPECTRUM_FRACTION = 0.1
MIN_FLOOR_BINS = 16


@dataclass(frozen=True)
class NoiseFloor:
    empirical: float
    theoretical: float
    n_bins: int

    @property
    def ratio(self) -> float:
        return self.empirical / self.theoretical if self.theoretical > 0 else math.inf


def shot_noise_variance(electron_count: float, impact_distance: float) -> float:
    """Spectral variance (e mu0 / (2 pi d))^2 N / (2 pi) of uncorrelated arrivals."""
    amplitude = ELEMENTARY_CHARGE * VACUUM_PERMEABILITY / (2.0 * math.pi * impact_distance)
    return amplitude**2 * electron_count / (2.0 * math.pi)


def _floor_mask(
    spectrum: Spectrum,
    omega0: float,
    harmonics_to_exclude: int,
    omega_max: float,
) -> np.ndarray:
    freqs = spectrum.frequencies
    d_omega = spectrum.d_omega
    mask = (freqs > 0) & (freqs <= omega_max)
    guard = (GUARD_BINS + 0.5) * d_omega
    mask &= np.abs(freqs) > guard
    # every harmonic inside the band carries signal, however many were asked for
    highest = max(harmonics_to_exclude, int((omega_max + guard) // omega0))
    for n in range(1, highest + 1):
        mask &= np.abs(freqs - n * omega0) > guard
    return mask


def noise_floor(
    trace: FieldTrace,
    harmonics_to_exclude: int,
    omega0: float | None = None,
    spectrum: Spectrum | None = None,
) -> NoiseFloor:
    """Variance of the off-harmonic spectrum bins next to the shot-noise formula.

    DC and the harmonics of omega0 are removed together with GUARD_BINS
    neighbours on each side: at least harmonics_to_exclude of them and every
    one below the top of the fitted band.
    """
    if trace.modulation_period is None and omega0 is None:
        raise ValueError("omega0 is required when the trace carries no modulation period")
    if omega0 is None:
        omega0 = 2.0 * math.pi / float(trace.modulation_period)
    if harmonics_to_exclude < 0:
        raise ValueError("harmonics_to_exclude must be non-negative")
    periods = trace.duration * omega0 / (2.0 * math.pi)
    if periods < MIN_FLOOR_PERIODS * (1 - 1e-9):
        raise DomainError(f"trace must cover at least {MIN_FLOOR_PERIODS} periods")
    if trace.impact_distance <= 0:
        raise ValueError("trace must record its impact distance")

    spec = spectrum if spectrum is not None else dft(trace)
    nyquist = math.pi / trace.dt
    omega_max = 0.5 * nyquist
    if trace.pulse_width > 0:
        omega_max = min(omega_max, FLAT_SPECTRUM_FRACTION / trace.pulse_width)
    mask = _floor_mask(spec, omega0, harmonics_to_exclude, omega_max)
    n_bins = int(np.count_nonzero(mask))
    if n_bins < MIN_FLOOR_BINS:
        raise DomainError(f"only {n_bins} off-harmonic bins available for the floor")
    empirical = float(np.var(spec.amplitudes[mask]))
    theoretical = shot_noise_variance(trace.electron_count, trace.impact_distance)
    return NoiseFloor(empirical=empirical, theoretical=theoretical, n_bins=n_bins)


def harmonic_amplitudes(spectrum: Spectrum, omega0: float, n_max: int) -> np.ndarray:
    """|s(n omega0)| at the bins closest to the first n_max harmonics."""
    if n_max <= 0:
        raise ValueError("n_max must be positive")
    return np.array(
        [abs(spectrum.amplitudes[spectrum.bin_of(n * omega0)]) for n in range(1, n_max + 1)]
    )


def peak_frequency(spectrum: Spectrum, omega_min: float) -> float:
    """Angular frequency of the largest bin above omega_min."""
    mask = spectrum.frequencies > omega_min
    if not np.any(mask):
        raise DomainError("no bins above omega_min")
    freqs = spectrum.frequencies[mask]
    return float(freqs[int(np.argmax(np.abs(spectrum.amplitudes[mask])))])


def snr(spectrum: Spectrum, omega0: float, floor: NoiseFloor) -> float:
    """First-harmonic amplitude over the empirical floor standard deviation."""
    if floor.empirical <= 0:
        return math.inf
    peak = abs(spectrum.amplitudes[spectrum.bin_of(omega0)])
    return float(peak / math.sqrt(floor.empirical))


def continuity_condition(spec: BeamSpec) -> float:
    """gamma v e / (I_min d), with I_min = I0 / (1 + r_b) the bunched-current minimum.

    Values well below one mean many electrons pass per field autocorrelation
    time, so the beam field may be treated as continuous.
    """
    r_b = bunching_parameter(spec)
    i_min = spec.mean_current / (1.0 + r_b)
    kin = spec.kinematics
    return kin.gamma * kin.velocity * ELEMENTARY_CHARGE / (i_min * spec.impact_distance)
