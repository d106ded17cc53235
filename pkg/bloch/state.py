"""Density matrix of a two-level system in the rotating frame."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from infra.errors import DensityMatrixError

TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9
REPAIR_TOL = 1e-12


@dataclass(frozen=True)
class BlochState:
    """rho_ee, rho_gg and the coherence rho_eg; rho_ge is its conjugate."""

    rho_ee: float
    rho_gg: float
    rho_eg: complex

    @classmethod
    def ground(cls) -> BlochState:
        return cls(0.0, 1.0, 0j)

    @classmethod
    def excited(cls) -> BlochState:
        return cls(1.0, 0.0, 0j)

    @classmethod
    def from_amplitudes(cls, alpha: complex, beta: complex) -> BlochState:
        """Pure state alpha |e> + beta |g>."""
        norm = abs(alpha) ** 2 + abs(beta) ** 2
        if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=TRACE_TOL):
            raise DensityMatrixError(f"amplitudes are not normalized (norm={norm:.12g})")
        return cls(abs(alpha) ** 2, abs(beta) ** 2, complex(alpha * np.conj(beta)))

    @classmethod
    def from_angles(cls, mixing: float, phase: float) -> BlochState:
        """alpha = cos(mixing), beta = exp(i phase) sin(mixing)."""
        beta = complex(np.exp(1j * phase)) * math.sin(mixing)
        return cls.from_amplitudes(math.cos(mixing), beta)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> BlochState:
        """Build from (rho_eg, rho_ge, rho_ee, rho_gg), keeping rho_eg."""
        v = np.asarray(vector)
        return cls(float(np.real(v[2])), float(np.real(v[3])), complex(v[0]))

    @property
    def inversion(self) -> float:
        return self.rho_ee - self.rho_gg

    def vector(self) -> np.ndarray:
        return np.array(
            [self.rho_eg, np.conj(self.rho_eg), self.rho_ee, self.rho_gg], dtype=complex
        )

    def violation(self) -> float:
        """Largest breach of trace, population sign or positivity."""
        trace = abs(self.rho_ee + self.rho_gg - 1.0)
        negative = max(0.0, -self.rho_ee, -self.rho_gg)
        positivity = max(0.0, abs(self.rho_eg) ** 2 - self.rho_ee * self.rho_gg)
        return max(trace, negative, positivity)

    def validate(self, tol: float = POSITIVITY_TOL) -> BlochState:
        excess = self.violation()
        if excess > tol:
            raise DensityMatrixError(f"invalid density matrix (violation {excess:.3g})")
        return self


def repaired(state: BlochState, tol: float = REPAIR_TOL) -> BlochState:
    """Project a state with a float-noise violation back onto valid density matrices."""
    excess = state.violation()
    if excess == 0.0:
        return state
    if excess > tol:
        raise DensityMatrixError(
            f"density matrix violation {excess:.3g} exceeds repair threshold {tol:.1g}"
        )
    ee = min(max(state.rho_ee, 0.0), 1.0)
    total = ee + max(state.rho_gg, 0.0)
    ee = ee / total if total > 0 else 0.0
    gg = 1.0 - ee
    bound = math.sqrt(ee * gg)
    coherence = state.rho_eg
    if abs(coherence) > bound:
        coherence = coherence * (bound / abs(coherence))
    return BlochState(ee, gg, coherence)


@dataclass(frozen=True)
class BlochTrajectory:
    """States at increasing times, stored as arrays."""

    times: np.ndarray
    rho_ee: np.ndarray
    rho_gg: np.ndarray
    rho_eg: np.ndarray

    def __post_init__(self) -> None:
        n = self.times.shape
        if self.rho_ee.shape != n or self.rho_gg.shape != n or self.rho_eg.shape != n:
            raise ValueError("trajectory columns must have equal length")

    @classmethod
    def from_vectors(cls, times: np.ndarray, vectors: np.ndarray) -> BlochTrajectory:
        """vectors has shape (4, n) in (rho_eg, rho_ge, rho_ee, rho_gg) order."""
        v = np.asarray(vectors)
        return cls(
            times=np.asarray(times, dtype=float),
            rho_ee=np.real(v[2]).astype(float),
            rho_gg=np.real(v[3]).astype(float),
            rho_eg=np.asarray(v[0], dtype=complex),
        )

    @property
    def inversion(self) -> np.ndarray:
        return self.rho_ee - self.rho_gg

    def state_at(self, index: int) -> BlochState:
        return BlochState(
            float(self.rho_ee[index]), float(self.rho_gg[index]), complex(self.rho_eg[index])
        )

    def max_trace_error(self) -> float:
        return float(np.max(np.abs(self.rho_ee + self.rho_gg - 1.0)))


def average_trajectories(trajectories: list[BlochTrajectory]) -> BlochTrajectory:
    """Mean over realizations sharing one time grid, summed in list order."""
    if not trajectories:
        raise ValueError("at least one trajectory is required")
    first = trajectories[0]
    ee = np.zeros_like(first.rho_ee)
    gg = np.zeros_like(first.rho_gg)
    eg = np.zeros_like(first.rho_eg)
    for traj in trajectories:
        if traj.times.shape != first.times.shape or not np.array_equal(traj.times, first.times):
            raise ValueError("trajectories must share one time grid")
        ee += traj.rho_ee
        gg += traj.rho_gg
        eg += traj.rho_eg
    n = len(trajectories)
    return BlochTrajectory(first.times, ee / n, gg / n, eg / n)
