"""Klystron bunching: drift-induced current modulation and its Fourier series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from beam.kinematics import ElectronKinematics
from infra.errors import DomainError, OvertakingError
from numerics.constants import ELECTRON_MASS, ELEMENTARY_CHARGE
from numerics.special import bessel_j

_KEPLER_TOL = 1e-14
_KEPLER_MAX_ITER = 100


@dataclass(frozen=True)
class BeamSpec:
    """Parameters of a velocity-modulated electron beam."""

    mean_current: float
    mod_angular_freq: float
    mod_depth: float
    drift_length: float
    kinematics: ElectronKinematics
    waist: float
    impact_distance: float
    linewidth: float = 0.0
    energy_spread: float = 0.0

    def __post_init__(self) -> None:
        if self.mean_current <= 0:
            raise ValueError("mean_current must be positive")
        if self.mod_angular_freq <= 0:
            raise ValueError("mod_angular_freq must be positive")
        if not 0.0 <= self.mod_depth < 1.0:
            raise ValueError("mod_depth must be in [0, 1)")
        if self.drift_length < 0:
            raise ValueError("drift_length must be non-negative")
        if self.kinematics.velocity <= 0:
            raise ValueError("kinetic energy must be positive")
        if self.waist <= 0:
            raise ValueError("waist must be positive")
        if self.impact_distance <= 0:
            raise ValueError("impact_distance must be positive")
        if self.linewidth < 0:
            raise ValueError("linewidth must be non-negative")
        if self.energy_spread < 0:
            raise ValueError("energy_spread must be non-negative")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mod_angular_freq

    @property
    def velocity_amplitude(self) -> float:
        """v1 = dE / (gamma^3 m v0), the first-order speed modulation."""
        kin = self.kinematics
        delta_e = self.mod_depth * kin.kinetic_energy * ELEMENTARY_CHARGE
        return delta_e / (kin.gamma**3 * ELECTRON_MASS * kin.velocity)


@dataclass(frozen=True)
class ModulatedCurrent:
    """Bunched current after the drift, parametrized by r_b."""

    r_b: float
    mean_current: float
    omega0: float
    v0: float
    z0: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_b < 1.0:
            raise OvertakingError(f"bunching parameter {self.r_b:.6g} outside [0, 1)")


def bunching_parameter(spec: BeamSpec) -> float:
    """r_b = l omega_0 v1 / v0**2; values >= 1 mean electrons overtake."""
    v0 = spec.kinematics.velocity
    r_b = spec.drift_length * spec.mod_angular_freq * spec.velocity_amplitude / v0**2
    if r_b >= 1.0:
        raise OvertakingError(f"bunching parameter r_b={r_b:.6g} >= 1")
    return r_b


def modulated_current(spec: BeamSpec, z0: float = 0.0) -> ModulatedCurrent:
    """Bunched current observed one drift length downstream of z0."""
    return ModulatedCurrent(
        r_b=bunching_parameter(spec),
        mean_current=spec.mean_current,
        omega0=spec.mod_angular_freq,
        v0=spec.kinematics.velocity,
        z0=z0,
    )


def kepler_theta(tau: float | np.ndarray, r_b: float) -> float | np.ndarray:
    """Solve theta - r_b sin(theta) = tau by safeguarded Newton iteration."""
    if not 0.0 <= r_b < 1.0:
        raise DomainError("r_b must be in [0, 1)")
    tau_arr = np.asarray(tau, dtype=float)
    scalar = tau_arr.ndim == 0
    tau_arr = np.atleast_1d(tau_arr)

    turns = np.round(tau_arr / (2.0 * math.pi))
    reduced = tau_arr - 2.0 * math.pi * turns
    if r_b == 0.0:
        theta = tau_arr.copy()
    else:
        lo = reduced - r_b
        hi = reduced + r_b
        theta = reduced.copy()
        for _ in range(_KEPLER_MAX_ITER):
            f = theta - r_b * np.sin(theta) - reduced
            lo = np.where(f < 0, theta, lo)
            hi = np.where(f > 0, theta, hi)
            step = f / (1.0 - r_b * np.cos(theta))
            candidate = theta - step
            outside = (candidate <= lo) | (candidate >= hi)
            theta = np.where(outside, 0.5 * (lo + hi), candidate)
            if np.all(np.abs(step) <= _KEPLER_TOL * np.maximum(1.0, np.abs(theta))):
                break
        theta = theta + 2.0 * math.pi * turns
    return float(theta[0]) if scalar else theta


def analytic_current(
    mc: ModulatedCurrent, z: float, t: float | np.ndarray
) -> float | np.ndarray:
    """I(z, t) = I0 / (1 - r_b cos theta) with theta from the Kepler relation."""
    tau = mc.omega0 * (np.asarray(t, dtype=float) - (z - mc.z0) / mc.v0)
    theta = kepler_theta(tau, mc.r_b)
    current = mc.mean_current / (1.0 - mc.r_b * np.cos(theta))
    return float(current) if np.ndim(current) == 0 else current


def fourier_coefficient(n: int, r_b: float, mean_current: float) -> float:
    """Cosine amplitude 2 I0 J_n(n r_b) of the n-th current harmonic."""
    if n <= 0:
        raise DomainError("harmonic index must be positive; the DC term is I0")
    if not 0.0 <= r_b < 1.0:
        raise DomainError("r_b must be in [0, 1)")
    return 2.0 * mean_current * bessel_j(n, n * r_b).value


def velocity_spread_effect(spec: BeamSpec) -> float:
    """Relative smearing of r_b caused by the kinetic-energy spread."""
    return spec.energy_spread / spec.kinematics.kinetic_energy
