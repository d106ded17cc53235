"""Semi-classical transition probabilities for a single passing electron.

(x, y) is the transverse position of the electron relative to the quantum
system; the electron travels along +z.
"""

from __future__ import annotations

import math

import numpy as np

from beam.kinematics import ElectronKinematics
from infra.errors import DomainError
from interaction.two_level import TwoLevelSystem, moment_vector
from numerics.constants import (
    ELEMENTARY_CHARGE,
    HBAR,
    VACUUM_PERMEABILITY,
    VACUUM_PERMITTIVITY,
)
from numerics.special import bessel_k


def _bessel_argument(system: TwoLevelSystem, kin: ElectronKinematics, r_perp: float) -> float:
    return system.omega0 * r_perp / (kin.gamma * kin.velocity)


def magnetic_transition_probability(
    system: TwoLevelSystem, kin: ElectronKinematics, x: float, y: float
) -> float:
    """P = (mu0 e |y mu_x - x mu_y| / (2 pi hbar r^2) * a K1(a))^2 with a = omega r / (gamma v).

    The same value holds for g -> e and e -> g.
    """
    r_perp = math.hypot(x, y)
    if r_perp == 0.0:
        raise DomainError("electron passes through the quantum system")
    mu = moment_vector(system)
    lever = abs(y * mu[0] - x * mu[1])
    arg = _bessel_argument(system, kin, r_perp)
    static = VACUUM_PERMEABILITY * ELEMENTARY_CHARGE * lever / (2.0 * math.pi * HBAR * r_perp**2)
    return (static * arg * bessel_k(1, arg).value) ** 2


def electric_transition_probability(
    system: TwoLevelSystem,
    kin: ElectronKinematics,
    x: float,
    y: float,
    dielectric_factor: float = 1.0,
) -> float:
    """Dipole excitation probability from the passing electron's electric field.

    The radial dipole component couples through K1 and the component along
    the electron direction through K0 / gamma. A target embedded
    in a dielectric sees the field reduced by dielectric_factor.
    """
    r_perp = math.hypot(x, y)
    if r_perp <= 0.0:
        raise DomainError("r_perp must be positive")
    if not 0.0 < dielectric_factor <= 1.0:
        raise ValueError("dielectric_factor must be in (0, 1]")
    if system.electric_moment is None:
        return 0.0
    dipole = np.asarray(system.electric_moment, dtype=float)
    radial = (dipole[0] * x + dipole[1] * y) / r_perp
    longitudinal = dipole[2]
    arg = _bessel_argument(system, kin, r_perp)
    prefactor = ELEMENTARY_CHARGE * system.omega0 / (
        2.0 * math.pi * HBAR * VACUUM_PERMITTIVITY * kin.gamma * kin.velocity**2
    )
    transverse_term = radial * bessel_k(1, arg).value
    longitudinal_term = longitudinal * bessel_k(0, arg).value / kin.gamma
    probability = prefactor**2 * (transverse_term**2 + longitudinal_term**2)
    return probability * dielectric_factor**2
