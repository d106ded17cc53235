"""Drive parameters of the Bloch solvers and their physical origin."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from interaction.two_level import SystemKind, TwoLevelSystem, effective_moment
from numerics.constants import ELEMENTARY_CHARGE, HBAR, VACUUM_PERMEABILITY


class DriveVariant(str, Enum):
    MEAN_RWA = "mean_rwa"
    SHOT_NOISE = "shot_noise"
    SPIKE_TRAIN = "spike_train"


@dataclass(frozen=True)
class DriveSpec:
    """Rabi frequency, phase-noise dephasing b and shot-noise damping a (all rad/s or 1/s)."""

    variant: DriveVariant
    rabi: float
    dephasing: float = 0.0
    shot_damping: float = 0.0
    second_harmonic_ratio: float = 0.0
    detuning: float = 0.0

    def __post_init__(self) -> None:
        if self.rabi < 0:
            raise ValueError("rabi must be non-negative")
        if self.dephasing < 0:
            raise ValueError("dephasing must be non-negative")
        if self.shot_damping < 0:
            raise ValueError("shot_damping must be non-negative")
        if not math.isfinite(self.detuning):
            raise ValueError("detuning must be finite")


def transition_moment(system: TwoLevelSystem, field: float | np.ndarray) -> float | np.ndarray:
    """Matrix element T_ge (J) for a field component along the coupling axis.

    The hyperfine transition couples as -g_S mu_B B / 2, the NV spin as
    +g_S mu_B B / sqrt(2) and a generic system as -|mu| B.
    """
    moment = effective_moment(system)
    sign = 1.0 if system.kind is SystemKind.NV_SPIN else -1.0
    return sign * moment * field


def rabi_from_current(system: TwoLevelSystem, resonant_current: float, d: float) -> float:
    """Omega = |T_ge| / hbar for the thin-beam field amplitude mu0 I_w0 / (2 pi d)."""
    if d <= 0:
        raise ValueError("d must be positive")
    if resonant_current < 0:
        raise ValueError("resonant_current must be non-negative")
    amplitude = VACUUM_PERMEABILITY * resonant_current / (2.0 * math.pi * d)
    return abs(float(transition_moment(system, amplitude))) / HBAR


def linewidth_to_b(fwhm: float) -> float:
    """Phase-noise dephasing b = delta_omega / 2 for a Lorentzian FWHM."""
    if fwhm < 0:
        raise ValueError("fwhm must be non-negative")
    return 0.5 * fwhm


def shot_damping_rate(probability: float, mean_current: float) -> float:
    """a = P I0 / e, the extra damping caused by the discreteness of the beam."""
    if probability < 0 or mean_current < 0:
        raise ValueError("probability and mean_current must be non-negative")
    return probability * mean_current / ELEMENTARY_CHARGE
