"""Order-of-magnitude checks around the coherent interaction regime."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from beam.kinematics import ElectronKinematics, modulation_wavelength
from beam.trajectories import PROFILE_SAMPLES, BeamTrajectory
from infra.errors import DomainError
from interaction.two_level import TwoLevelSystem
from numerics.constants import ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY
from numerics.quadrature import gauss_hermite_normal
from numerics.special import bessel_k_array

# extrapolated total scattering cross section of potassium at 18 keV
K41_TOTAL_CROSS_SECTION = 1.5e-21
DIAMOND_REFRACTIVE_INDEX = 2.4


def momentum_shift_check(
    system: TwoLevelSystem, kin: ElectronKinematics, delta_z0: float
) -> float:
    """Ratio of the recoil hbar omega0 / v to the packet momentum spread hbar / (2 dz0)."""
    if delta_z0 <= 0:
        raise ValueError("delta_z0 must be positive")
    wavelength = modulation_wavelength(kin, system.omega0)
    return 4.0 * math.pi * delta_z0 / wavelength


def recoil_momentum_bound(delta_r_perp: float) -> float:
    """Transverse momentum transfer bound hbar / dr, twice the packet momentum spread."""
    if delta_r_perp <= 0:
        raise ValueError("delta_r_perp must be positive")
    return HBAR / delta_r_perp


def lamb_dicke_bound(delta_p_perp: float, mass: float, trap_freq: float) -> float:
    if delta_p_perp < 0:
        raise ValueError("delta_p_perp must be non-negative")
    if mass <= 0 or trap_freq <= 0:
        raise ValueError("mass and trap_freq must be positive")
    return delta_p_perp / math.sqrt(2.0 * mass * HBAR * trap_freq)


def incoherent_loss_fraction(sigma_tot: float, current_density: float, t: float) -> float:
    """Fraction of targets hit by at least one short-range scattering event."""
    if sigma_tot < 0 or current_density < 0 or t < 0:
        raise ValueError("sigma_tot, current_density and t must be non-negative")
    return -math.expm1(-sigma_tot * current_density * t / ELEMENTARY_CHARGE)


def doppler_detuning(v_atom: float, f0: float, v_beam: float) -> float:
    if v_beam <= 0:
        raise ValueError("v_beam must be positive")
    if abs(v_atom) >= v_beam:
        raise DomainError("atom speed must be far below the beam speed")
    return v_atom * f0 / v_beam


def gaussian_peak_current_density(current: float, waist: float) -> float:
    if waist <= 0:
        raise ValueError("waist must be positive")
    return 2.0 * current / (math.pi * waist * waist)


def dielectric_factor(n: float) -> float:
    """Field reduction 2 / (n^2 + 1) inside a dielectric half-space."""
    if n < 1:
        raise ValueError("refractive index must be at least 1")
    return 2.0 / (n * n + 1.0)


@dataclass(frozen=True)
class FlopLoss:
    electrons_per_flop: float
    mean_probability: float
    no_excitation: float


def electric_loss_per_flop(
    trajectory: BeamTrajectory,
    target: tuple[float, float],
    optical: TwoLevelSystem,
    kin: ElectronKinematics,
    rabi_per_ampere: float,
    waist: float,
    field_factor: float = 1.0,
    hermite_nodes: int = 12,
    n_samples: int = PROFILE_SAMPLES,
) -> FlopLoss:
    """Probability that no electron excites the optical dipole during one Rabi flop.

    The single-electron probability treats the whole dipole as radial, the
    strongest coupling, and is averaged over the trajectory and
    over a Gaussian beam profile with sigma = w / 2 per transverse axis.
    """
    if rabi_per_ampere <= 0:
        raise ValueError("rabi_per_ampere must be positive")
    if waist <= 0:
        raise ValueError("waist must be positive")
    if optical.electric_moment is None:
        raise DomainError("optical transition needs an electric moment")
    dipole = float(np.linalg.norm(optical.electric_moment))

    _, centres, weights = trajectory.sample(n_samples)
    nodes, node_weights = gauss_hermite_normal(hermite_nodes)
    sigma = 0.5 * waist
    dx, dy = np.meshgrid(sigma * nodes, sigma * nodes, indexing="ij")
    offset_weights = np.outer(node_weights, node_weights).ravel()

    # electron positions relative to the target: (n_phase, n_offset)
    rel_x = centres[:, 0, None] + dx.ravel()[None, :] - target[0]
    rel_y = centres[:, 1, None] + dy.ravel()[None, :] - target[1]
    r_perp = np.hypot(rel_x, rel_y)
    if np.any(r_perp <= 0):
        raise DomainError("beam profile node coincides with the target")
    arg = optical.omega0 * r_perp / (kin.gamma * kin.velocity)
    prefactor = ELEMENTARY_CHARGE * optical.omega0 / (
        2.0 * math.pi * HBAR * VACUUM_PERMITTIVITY * kin.gamma * kin.velocity**2
    )
    probability = (prefactor * dipole * bessel_k_array(1, arg) * field_factor) ** 2
    per_phase = probability @ offset_weights
    mean_probability = float(np.sum(per_phase * weights) / np.sum(weights))

    electrons = math.pi / (ELEMENTARY_CHARGE * rabi_per_ampere)
    no_excitation = math.exp(electrons * math.log1p(-min(mean_probability, 1.0 - 1e-16)))
    return FlopLoss(electrons, mean_probability, no_excitation)
