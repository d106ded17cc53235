"""Electron wave packet and the dimensionless variables of the scattering integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from beam.kinematics import kinematics_from_energy
from numerics.constants import ELECTRON_MASS, HBAR, SPEED_OF_LIGHT

DEFAULT_TRUNCATION = 5.0


class Direction(str, Enum):
    """Which way the quantum system moves; absorption flips the sign of omega0."""

    EMISSION = "e_to_g"
    ABSORPTION = "g_to_e"


@dataclass(frozen=True)
class WavePacketSpec:
    """Gaussian electron packet: widths in m, energy in eV, offset (x, y) in m."""

    delta_r_perp: float
    delta_z0: float
    kinetic_energy: float
    impact_offset: tuple[float, float]
    total_path: float = 1.0

    def __post_init__(self) -> None:
        if self.delta_r_perp <= 0:
            raise ValueError("delta_r_perp must be positive")
        if self.delta_z0 <= 0:
            raise ValueError("delta_z0 must be positive")
        if self.kinetic_energy <= 0:
            raise ValueError("kinetic_energy must be positive")
        if self.total_path < 0:
            raise ValueError("total_path must be non-negative")

    @property
    def delta_pz(self) -> float:
        return HBAR / (2.0 * self.delta_z0)

    @property
    def delta_p_perp(self) -> float:
        return HBAR / (2.0 * self.delta_r_perp)


@dataclass(frozen=True)
class DimensionlessParams:
    """Momenta in units of 2 dp, energies in units of 2 c dp_z.

    length_scale keeps delta_r_perp in metres so probabilities can be put
    back into absolute units.
    """

    omega0: float
    mass: float
    xi: float
    pi_z0: float
    rho_offset: tuple[float, float]
    l_tilde: float
    length_scale: float

    @property
    def rho(self) -> float:
        return math.hypot(*self.rho_offset)

    @property
    def inverse_beta(self) -> float:
        """c / v of the packet centre."""
        return math.hypot(self.pi_z0, self.mass) / self.pi_z0


@dataclass(frozen=True)
class GridResolution:
    """Sample budget of the scattering integrals.

    The outer momentum integral uses 2**log2_samples scrambled Sobol points
    per scramble (or hermite_nodes per axis in tensor mode); the inner
    transverse integral is a polar grid with radial_nodes x angular_nodes.
    """

    log2_samples: int = 9
    scrambles: int = 8
    radial_nodes: int = 128
    angular_nodes: int = 128
    truncation: float = DEFAULT_TRUNCATION
    seed: int = 0
    tensor_grid: bool = False
    hermite_nodes: int = 16
    chunk: int = 16

    def __post_init__(self) -> None:
        if self.log2_samples < 1:
            raise ValueError("log2_samples must be at least 1")
        if self.scrambles < 2:
            raise ValueError("scrambles must be at least 2")
        if self.radial_nodes < 4 or self.angular_nodes < 4:
            raise ValueError("inner grid needs at least 4 nodes per axis")
        if self.angular_nodes % 2:
            raise ValueError("angular_nodes must be even")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")
        if self.hermite_nodes < 4:
            raise ValueError("hermite_nodes must be at least 4")
        if self.chunk <= 0:
            raise ValueError("chunk must be positive")

    def refined(self, factor: int) -> GridResolution:
        """Same grid with factor times more outer samples."""
        extra = max(0, int(round(math.log2(max(1, factor)))))
        return GridResolution(
            log2_samples=self.log2_samples + extra,
            scrambles=self.scrambles,
            radial_nodes=self.radial_nodes,
            angular_nodes=self.angular_nodes,
            truncation=self.truncation,
            seed=self.seed,
            tensor_grid=self.tensor_grid,
            hermite_nodes=self.hermite_nodes + 4 * extra,
            chunk=self.chunk,
        )

    def describe(self) -> dict[str, object]:
        return {
            "mode": "tensor_grid" if self.tensor_grid else "rqmc",
            "log2_samples": self.log2_samples,
            "scrambles": self.scrambles,
            "radial_nodes": self.radial_nodes,
            "angular_nodes": self.angular_nodes,
            "truncation": self.truncation,
            "hermite_nodes": self.hermite_nodes,
            "seed": self.seed,
        }


DESK_GRID = GridResolution()
FINE_GRID = GridResolution(log2_samples=12, scrambles=16, radial_nodes=192, angular_nodes=192)


def dimensionless_params(wp: WavePacketSpec, omega0: float) -> DimensionlessParams:
    """Omega0 = hbar w0 / (2 c dp_z), M = m c / (2 dp_z), xi = dp_perp / dp_z."""
    if omega0 < 0:
        raise ValueError("omega0 must be non-negative")
    kin = kinematics_from_energy(wp.kinetic_energy)
    two_dpz = 2.0 * wp.delta_pz
    momentum = kin.gamma * ELECTRON_MASS * kin.velocity
    return DimensionlessParams(
        omega0=HBAR * omega0 / (SPEED_OF_LIGHT * two_dpz),
        mass=ELECTRON_MASS * SPEED_OF_LIGHT / two_dpz,
        xi=wp.delta_p_perp / wp.delta_pz,
        pi_z0=momentum / two_dpz,
        rho_offset=(
            wp.impact_offset[0] / wp.delta_r_perp,
            wp.impact_offset[1] / wp.delta_r_perp,
        ),
        l_tilde=wp.total_path / wp.delta_z0,
        length_scale=wp.delta_r_perp,
    )


def semiclassical_ratio_prefactor(dp: DimensionlessParams) -> float:
    """Ratio of the squared amplitude prefactor to the point-electron probability.

    Multiplying the dimensionless momentum integral by this factor gives
    P_QED / P_semiclassical for a moment perpendicular to the offset.
    """
    return dp.rho**2 / (4.0 * math.pi**3 * math.sqrt(2.0 * math.pi))
