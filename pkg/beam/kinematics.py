"""Relativistic kinematics of beam electrons."""

from __future__ import annotations

import math
from dataclasses import dataclass

from infra.errors import DomainError
from numerics.constants import ELECTRON_REST_ENERGY_EV, SPEED_OF_LIGHT


@dataclass(frozen=True)
class ElectronKinematics:
    """Kinetic energy (eV), speed (m/s) and Lorentz factor of a beam electron."""

    kinetic_energy: float
    velocity: float
    gamma: float

    @property
    def beta(self) -> float:
        return self.velocity / SPEED_OF_LIGHT


def kinematics_from_energy(kinetic_energy_ev: float) -> ElectronKinematics:
    """Exact relativistic speed and gamma for a kinetic energy in eV."""
    if not math.isfinite(kinetic_energy_ev) or kinetic_energy_ev < 0:
        raise DomainError("kinetic energy must be non-negative")
    gamma = 1.0 + kinetic_energy_ev / ELECTRON_REST_ENERGY_EV
    # 1 - gamma**-2 written to avoid cancellation at low energy
    ratio = kinetic_energy_ev / ELECTRON_REST_ENERGY_EV
    beta_sq = ratio * (2.0 + ratio) / (gamma * gamma)
    return ElectronKinematics(
        kinetic_energy=kinetic_energy_ev,
        velocity=SPEED_OF_LIGHT * math.sqrt(beta_sq),
        gamma=gamma,
    )


def modulation_wavelength(kinematics: ElectronKinematics, omega0: float) -> float:
    """Spatial period lambda_0 = 2 pi v / omega_0 of the current modulation."""
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    return 2.0 * math.pi * kinematics.velocity / omega0
