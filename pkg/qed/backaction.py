"""Transition probability and coherence of the electron state after one passage."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from beam.kinematics import kinematics_from_energy
from infra.errors import ConvergenceError, DomainError
from infra.recovery import RefinementSchedule, is_refinable_error, retry_operation
from interaction.probability import magnetic_transition_probability
from interaction.two_level import TwoLevelSystem, moment_vector
from numerics.constants import (
    ELEMENTARY_CHARGE,
    HBAR,
    SPEED_OF_LIGHT,
    VACUUM_PERMEABILITY,
)
from qed.integrate import (
    AmplitudeKernel,
    ChannelSums,
    IntegralEstimate,
    estimate,
    sample_count,
    scrambled_sums,
)
from qed.kernels import InnerGrid, OuterGeometry, electric_amplitudes, magnetic_amplitudes
from qed.params import (
    DESK_GRID,
    DimensionlessParams,
    Direction,
    GridResolution,
    WavePacketSpec,
    dimensionless_params,
)

logger = logging.getLogger("klystron")

DEFAULT_PROBABILITY_TOL = 0.05
DEFAULT_OVERLAP_TOL = 0.005
DEFAULT_ATTEMPTS = 3


@dataclass(frozen=True)
class OverlapEstimate:
    value: complex
    error: float
    samples: int


@dataclass(frozen=True)
class SpinChannels:
    """Spin-conserving and spin-flip probabilities for one incoming spin."""

    conserving: IntegralEstimate
    flip: IntegralEstimate

    @property
    def total(self) -> float:
        return self.conserving.value + self.flip.value


@dataclass(frozen=True)
class BackactionResult:
    p_plus: float
    p_minus: float
    overlap: complex
    p_semiclassical: float
    errors: dict[str, float]
    samples_used: int
    grid_meta: dict[str, object]
    params: dict[str, object] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        """P_QED / P_semiclassical for the spin-averaged probability."""
        if self.p_semiclassical <= 0.0:
            return math.nan
        return 0.5 * (self.p_plus + self.p_minus) / self.p_semiclassical

    def to_record(self) -> dict[str, object]:
        return {
            "params": self.params,
            "P_plus": self.p_plus,
            "P_minus": self.p_minus,
            "overlap_re": self.overlap.real,
            "overlap_im": self.overlap.imag,
            "P_semiclassical": self.p_semiclassical,
            "ratio": self.ratio,
            "err_estimates": self.errors,
            "samples_used": self.samples_used,
            "grid": self.grid_meta,
        }


def _omega_t(dp: DimensionlessParams, direction: Direction) -> float:
    return dp.omega0 if direction is Direction.EMISSION else -dp.omega0


def _spin_index(spin: float) -> int:
    if spin == 0.5:
        return 0
    if spin == -0.5:
        return 1
    raise ValueError("spin must be +1/2 or -1/2")


def _transverse_unit(moment: np.ndarray) -> tuple[float, tuple[float, float]]:
    vec = np.asarray(moment, dtype=float)
    if vec.shape != (3,):
        raise ValueError("moment must be a 3-vector")
    magnitude = float(np.linalg.norm(vec))
    if magnitude == 0.0:
        raise DomainError("moment must be non-zero")
    if abs(vec[2]) > 1e-12 * magnitude:
        raise DomainError("the scattering kernel needs a moment transverse to the beam")
    return magnitude, (float(vec[0] / magnitude), float(vec[1] / magnitude))


def _amplitude_scale(dp: DimensionlessParams) -> float:
    return 1.0 / (HBAR * dp.length_scale * math.sqrt(math.pi) * (2.0 * math.pi) ** 2.25)


def magnetic_prefactor_sq(dp: DimensionlessParams, moment: float) -> float:
    """Squared prefactor turning the momentum integral into a probability."""
    return (ELEMENTARY_CHARGE * VACUUM_PERMEABILITY * moment * _amplitude_scale(dp)) ** 2


def electric_prefactor_sq(dp: DimensionlessParams, dipole: float) -> float:
    scale = ELEMENTARY_CHARGE * VACUUM_PERMEABILITY * SPEED_OF_LIGHT * dipole
    return (scale * _amplitude_scale(dp)) ** 2


def _magnetic_kernel(unit: tuple[float, float]) -> AmplitudeKernel:
    def kernel(
        dp: DimensionlessParams, outer: OuterGeometry, inner: InnerGrid, omega_t: float
    ) -> tuple[np.ndarray, np.ndarray]:
        return magnetic_amplitudes(dp, outer, inner, omega_t, unit)

    return kernel


def _electric_kernel(unit: tuple[float, float, float]) -> AmplitudeKernel:
    def kernel(
        dp: DimensionlessParams, outer: OuterGeometry, inner: InnerGrid, omega_t: float
    ) -> tuple[np.ndarray, np.ndarray]:
        return electric_amplitudes(dp, outer, inner, omega_t, unit)

    return kernel


def _magnetic_sums(
    dp: DimensionlessParams,
    moment: np.ndarray,
    grid: GridResolution,
    direction: Direction,
    workers: int,
) -> tuple[float, list[ChannelSums]]:
    magnitude, unit = _transverse_unit(moment)
    sums = scrambled_sums(dp, _magnetic_kernel(unit), grid, _omega_t(dp, direction), workers)
    return magnitude, sums


def scattered_probability_magnetic(
    dp: DimensionlessParams,
    spin: float,
    moment: np.ndarray,
    grid: GridResolution = DESK_GRID,
    *,
    direction: Direction = Direction.EMISSION,
    workers: int = 1,
) -> IntegralEstimate:
    """Transition probability of a magnetic dipole for incoming spin s, summed over s'.

    moment is the transition moment in J/T and must lie in the transverse plane.
    """
    index = _spin_index(spin)
    magnitude, sums = _magnetic_sums(dp, moment, grid, direction, workers)
    scale = magnetic_prefactor_sq(dp, magnitude)
    return estimate(
        [scale * float(s.total[index]) for s in sums], sample_count(grid), grid.tensor_grid
    )


def _overlap_estimate(sums: list[ChannelSums], grid: GridResolution) -> OverlapEstimate:
    values = np.array([s.normalized_overlap for s in sums])
    if grid.tensor_grid:
        spread = float(abs(values[0] - values[1]))
        return OverlapEstimate(complex(values[0]), spread, sample_count(grid))
    error = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return OverlapEstimate(complex(np.mean(values)), error, sample_count(grid))


def overlap_magnetic(
    dp: DimensionlessParams,
    moment: np.ndarray,
    grid: GridResolution = DESK_GRID,
    *,
    direction: Direction = Direction.EMISSION,
    workers: int = 1,
) -> OverlapEstimate:
    """Spin-averaged normalised overlap of the scattered and un-dispersed incoming packet."""
    _, sums = _magnetic_sums(dp, moment, grid, direction, workers)
    return _overlap_estimate(sums, grid)


def scattered_probability_electric(
    dp: DimensionlessParams,
    dipole: np.ndarray,
    spin: float,
    grid: GridResolution = DESK_GRID,
    *,
    direction: Direction = Direction.EMISSION,
    workers: int = 1,
) -> SpinChannels:
    """Electric dipole transition probability split by spin channel.

    dipole is the transition dipole in C m; dp must be built with the
    optical transition frequency.
    """
    index = _spin_index(spin)
    vec = np.asarray(dipole, dtype=float)
    magnitude = float(np.linalg.norm(vec))
    samples = sample_count(grid)
    if magnitude == 0.0:
        zero = IntegralEstimate(0.0, 0.0, 0)
        return SpinChannels(zero, zero)
    unit = (float(vec[0] / magnitude), float(vec[1] / magnitude), float(vec[2] / magnitude))
    sums = scrambled_sums(dp, _electric_kernel(unit), grid, _omega_t(dp, direction), workers)
    scale = electric_prefactor_sq(dp, magnitude)
    conserving = estimate(
        [scale * float(s.conserving[index]) for s in sums], samples, grid.tensor_grid
    )
    flip = estimate([scale * float(s.flip[index]) for s in sums], samples, grid.tensor_grid)
    return SpinChannels(conserving, flip)


def backaction_result(
    wp: WavePacketSpec,
    system: TwoLevelSystem,
    grid: GridResolution = DESK_GRID,
    *,
    direction: Direction = Direction.EMISSION,
    workers: int = 1,
    probability_tol: float = DEFAULT_PROBABILITY_TOL,
    overlap_tol: float = DEFAULT_OVERLAP_TOL,
    max_attempts: int = DEFAULT_ATTEMPTS,
) -> BackactionResult:
    """Both spin probabilities, the overlap and the point-electron reference.

    Each retry doubles the outer sample budget. When the last attempt still
    misses a tolerance, ConvergenceError carries the best result as partial.
    """
    dp = dimensionless_params(wp, system.omega0)
    moment = moment_vector(system)
    kin = kinematics_from_energy(wp.kinetic_energy)
    x, y = wp.impact_offset
    p_semi = magnetic_transition_probability(system, kin, x, y)
    params = {
        "omega0": dp.omega0,
        "mass": dp.mass,
        "xi": dp.xi,
        "pi_z0": dp.pi_z0,
        "rho_offset": list(dp.rho_offset),
        "l_tilde": dp.l_tilde,
        "direction": direction.value,
    }

    def attempt(number: int) -> BackactionResult:
        refined = grid.refined(RefinementSchedule().scale_for_attempt(number))
        magnitude, sums = _magnetic_sums(dp, moment, refined, direction, workers)
        scale = magnetic_prefactor_sq(dp, magnitude)
        samples = sample_count(refined)
        plus = estimate([scale * float(s.total[0]) for s in sums], samples, refined.tensor_grid)
        minus = estimate([scale * float(s.total[1]) for s in sums], samples, refined.tensor_grid)
        overlap = _overlap_estimate(sums, refined)
        result = BackactionResult(
            p_plus=plus.value,
            p_minus=minus.value,
            overlap=overlap.value,
            p_semiclassical=p_semi,
            errors={"P_plus": plus.error, "P_minus": minus.error, "overlap": overlap.error},
            samples_used=samples,
            grid_meta=refined.describe(),
            params=params,
        )
        relative = 0.0
        if plus.value > 0 and minus.value > 0:
            relative = max(plus.error / plus.value, minus.error / minus.value)
        if relative > probability_tol or overlap.error > overlap_tol:
            raise ConvergenceError(
                "scattering integrals above tolerance",
                partial=result,
                error_estimate=max(relative, overlap.error),
            )
        return result

    def on_retry(number: int, exc: Exception) -> None:
        logger.warning(
            "refining scattering integrals",
            extra={
                "event_type": "convergence_retry",
                "metadata": {"attempt": number, "error": str(exc)},
            },
        )

    return retry_operation(
        attempt,
        should_retry=is_refinable_error,
        max_attempts=max_attempts,
        on_retry=on_retry,
    )
