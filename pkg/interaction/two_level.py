"""Two-level quantum systems driven by the beam near field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from infra.errors import DomainError
from numerics.constants import (
    BOHR_MAGNETON,
    BOHR_RADIUS,
    ELECTRON_G_FACTOR,
    ELEMENTARY_CHARGE,
    HBAR,
    TWO_PI,
)

K41_CLOCK_FREQUENCY_HZ = 254.0e6
NV_ZERO_FIELD_SPLITTING_HZ = 2.87e9
NV_ZPL_ENERGY_EV = 1.945
NV_ZPL_DIPOLE_ATOMIC_UNITS = 2.27


class SystemKind(str, Enum):
    K41_HYPERFINE = "k41_hyperfine"
    NV_SPIN = "nv_spin"
    GENERIC = "generic"


@dataclass(frozen=True)
class TwoLevelSystem:
    """Transition frequency, dipole moments and relaxation rates.

    magnetic_moment is a direction with the magnitude used by the GENERIC
    kind; the other kinds take their magnitude from effective_moment.
    """

    omega0: float
    kind: SystemKind = SystemKind.GENERIC
    magnetic_moment: np.ndarray = field(default_factory=lambda: np.zeros(3))
    electric_moment: np.ndarray | None = None
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self) -> None:
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.gamma1 < 0:
            raise ValueError("gamma1 must be non-negative")
        if self.gamma2 < 0.5 * self.gamma1 * (1 - 1e-12):
            raise ValueError("gamma2 must be at least gamma1 / 2")
        if np.shape(self.magnetic_moment) != (3,):
            raise ValueError("magnetic_moment must be a 3-vector")
        if self.electric_moment is not None and np.shape(self.electric_moment) != (3,):
            raise ValueError("electric_moment must be a 3-vector")

    @property
    def moment_direction(self) -> np.ndarray:
        norm = float(np.linalg.norm(self.magnetic_moment))
        if norm == 0.0:
            return np.array([1.0, 0.0, 0.0])
        return np.asarray(self.magnetic_moment, dtype=float) / norm

    def with_relaxation(self, gamma1: float, gamma2: float) -> TwoLevelSystem:
        return TwoLevelSystem(
            self.omega0, self.kind, self.magnetic_moment, self.electric_moment, gamma1, gamma2
        )


def effective_moment(system: TwoLevelSystem) -> float:
    """Magnitude (J/T) of the magnetic transition moment for the system kind."""
    if system.kind is SystemKind.K41_HYPERFINE:
        return ELECTRON_G_FACTOR * BOHR_MAGNETON / 2.0
    if system.kind is SystemKind.NV_SPIN:
        return ELECTRON_G_FACTOR * BOHR_MAGNETON / math.sqrt(2.0)
    magnitude = float(np.linalg.norm(system.magnetic_moment))
    if magnitude == 0.0:
        raise DomainError("generic systems need an explicit magnetic moment")
    return magnitude


def moment_vector(system: TwoLevelSystem) -> np.ndarray:
    return effective_moment(system) * system.moment_direction


def k41_clock_system(gamma1: float = 0.0, gamma2: float = 0.0) -> TwoLevelSystem:
    """41K hyperfine clock transition, coupled through B along x."""
    return TwoLevelSystem(
        omega0=TWO_PI * K41_CLOCK_FREQUENCY_HZ,
        kind=SystemKind.K41_HYPERFINE,
        magnetic_moment=np.array([1.0, 0.0, 0.0]),
        gamma1=gamma1,
        gamma2=gamma2,
    )


def nv_spin_system(t1: float = 6e-3, t2: float = 3e-3) -> TwoLevelSystem:
    """NV ground-state spin (m_s = 0 to +1) with relaxation times T1, T2."""
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1 and t2 must be positive")
    return TwoLevelSystem(
        omega0=TWO_PI * NV_ZERO_FIELD_SPLITTING_HZ,
        kind=SystemKind.NV_SPIN,
        magnetic_moment=np.array([1.0, 0.0, 0.0]),
        gamma1=1.0 / t1,
        gamma2=1.0 / t2,
    )


def nv_zpl_system(direction: tuple[float, float, float] = (0.0, 1.0, 0.0)) -> TwoLevelSystem:
    """NV optical zero-phonon-line transition with a 2.27 e a0 dipole."""
    unit = np.asarray(direction, dtype=float)
    unit = unit / np.linalg.norm(unit)
    return TwoLevelSystem(
        omega0=NV_ZPL_ENERGY_EV * ELEMENTARY_CHARGE / HBAR,
        kind=SystemKind.GENERIC,
        electric_moment=NV_ZPL_DIPOLE_ATOMIC_UNITS * ELEMENTARY_CHARGE * BOHR_RADIUS * unit,
    )
