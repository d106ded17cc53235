"""Constant-coefficient Bloch equations: phase-noise RWA and shot-noise variants."""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import expm

from bloch.drive import DriveSpec, DriveVariant
from bloch.state import BlochState, BlochTrajectory
from infra.errors import DomainError
from interaction.two_level import TwoLevelSystem
from numerics.ode import integrate_ode

logger = logging.getLogger("klystron")

SHOT_DAMPING_WARN_FRACTION = 0.01


def mean_rwa_matrix(system: TwoLevelSystem, drive: DriveSpec) -> np.ndarray:
    """Generator on (rho_eg, rho_ge, rho_ee, rho_gg) with coherence damping Gamma2 + b."""
    half = 0.5 * drive.rabi
    damp = system.gamma2 + drive.dephasing
    g1 = system.gamma1
    matrix = np.array(
        [
            [-damp, 0.0, -1j * half, 1j * half],
            [0.0, -damp, 1j * half, -1j * half],
            [-1j * half, 1j * half, -g1, 0.0],
            [1j * half, -1j * half, g1, 0.0],
        ],
        dtype=complex,
    )
    matrix[0, 0] -= 1j * drive.detuning
    matrix[1, 1] += 1j * drive.detuning
    return matrix


def shot_noise_matrix(system: TwoLevelSystem, drive: DriveSpec) -> np.ndarray:
    """Mean-field generator with shot-noise damping a and the second-harmonic cross term."""
    a = drive.shot_damping
    cross = a * drive.second_harmonic_ratio
    matrix = mean_rwa_matrix(system, DriveSpec(DriveVariant.MEAN_RWA, drive.rabi, 0.0))
    matrix += np.array(
        [
            [-a, cross, 0.0, 0.0],
            [cross, -a, 0.0, 0.0],
            [0.0, 0.0, -a, a],
            [0.0, 0.0, a, -a],
        ],
        dtype=complex,
    )
    return matrix


def _solve_linear(
    matrix: np.ndarray,
    rho0: BlochState,
    t_grid: np.ndarray,
    rel_tol: float,
    abs_tol: float,
) -> BlochTrajectory:
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    rho0.validate()
    solution = integrate_ode(
        lambda _t, y: matrix @ y,
        float(times[0]),
        float(times[-1]),
        rho0.vector(),
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        t_eval=times,
    )
    return BlochTrajectory.from_vectors(solution.t, solution.y.T)


def solve_mean_rwa(
    system: TwoLevelSystem,
    drive: DriveSpec,
    rho0: BlochState,
    t_grid: np.ndarray,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> BlochTrajectory:
    """Modified optical Bloch equations averaged over the modulation phase noise."""
    if drive.variant is not DriveVariant.MEAN_RWA:
        raise DomainError("solve_mean_rwa needs a mean_rwa drive")
    return _solve_linear(mean_rwa_matrix(system, drive), rho0, t_grid, rel_tol, abs_tol)


def solve_shot_noise(
    system: TwoLevelSystem,
    drive: DriveSpec,
    rho0: BlochState,
    t_grid: np.ndarray,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> BlochTrajectory:
    """Bloch equations with the expectation-value damping caused by shot noise."""
    if drive.variant is not DriveVariant.SHOT_NOISE:
        raise DomainError("solve_shot_noise needs a shot_noise drive")
    if drive.rabi > 0 and drive.shot_damping > SHOT_DAMPING_WARN_FRACTION * drive.rabi:
        logger.warning(
            "shot-noise damping is not small against the Rabi frequency",
            extra={
                "event_type": "validity",
                "metadata": {"shot_damping": drive.shot_damping, "rabi": drive.rabi},
            },
        )
    return _solve_linear(shot_noise_matrix(system, drive), rho0, t_grid, rel_tol, abs_tol)


def propagate_exact(
    matrix: np.ndarray, rho0: BlochState, t_grid: np.ndarray
) -> BlochTrajectory:
    """Closed-form solution exp(M (t - t0)) rho0 on each grid time."""
    times = np.asarray(t_grid, dtype=float)
    v0 = rho0.vector()
    vectors = np.empty((4, times.size), dtype=complex)
    for index, t in enumerate(times):
        vectors[:, index] = expm(matrix * (t - times[0])) @ v0
    return BlochTrajectory.from_vectors(times, vectors)


def solve_driven(
    system: TwoLevelSystem,
    rabi: float,
    drive_omega: float,
    rho0: BlochState,
    t_grid: np.ndarray,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-11,
) -> BlochTrajectory:
    """Rotating-frame Bloch equations without RWA for T_ge = -hbar rabi cos(drive_omega t).

    On resonance and for rabi << omega0 this reduces to solve_mean_rwa.
    """
    if rabi < 0 or drive_omega <= 0:
        raise ValueError("rabi must be non-negative and drive_omega positive")
    omega0 = system.omega0
    g1 = system.gamma1
    g2 = system.gamma2

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        coupling = -rabi * np.cos(drive_omega * t)
        up = np.exp(1j * omega0 * t)
        down = up.conjugate()
        inversion = y[2] - y[3]
        d_ee = 1j * coupling * (down * y[0] - up * y[1]) - g1 * y[2]
        return np.array(
            [
                -g2 * y[0] + 1j * coupling * up * inversion,
                -g2 * y[1] - 1j * coupling * down * inversion,
                d_ee,
                -d_ee,
            ]
        )

    times = np.asarray(t_grid, dtype=float)
    rho0.validate()
    solution = integrate_ode(
        rhs,
        float(times[0]),
        float(times[-1]),
        rho0.vector(),
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        t_eval=times,
    )
    return BlochTrajectory.from_vectors(solution.t, solution.y.T)


def inversion_peaks(trajectory: BlochTrajectory, prominence: float = 0.05) -> list[int]:
    """Indices of inversion maxima that rise and fall by at least prominence."""
    inv = trajectory.inversion
    peaks: list[int] = []
    low = float(inv[0])
    best = -1
    for k, value in enumerate(inv):
        if best < 0:
            low = min(low, float(value))
            if value >= low + prominence:
                best = k
        elif value > inv[best]:
            best = k
        elif value <= inv[best] - prominence:
            peaks.append(best)
            best = -1
            low = float(value)
    return peaks


def first_maximum(
    trajectory: BlochTrajectory, prominence: float = 0.05
) -> tuple[float, float]:
    """(time, inversion) of the first prominent inversion maximum."""
    peaks = inversion_peaks(trajectory, prominence)
    if not peaks:
        raise DomainError("inversion has no prominent maximum")
    k = peaks[0]
    return float(trajectory.times[k]), float(trajectory.inversion[k])


def oscillation_frequency(trajectory: BlochTrajectory, prominence: float = 0.05) -> float:
    """Angular frequency from the mean spacing of prominent inversion maxima."""
    peaks = inversion_peaks(trajectory, prominence)
    if len(peaks) < 2:
        raise DomainError("need at least two inversion maxima")
    spacing = (trajectory.times[peaks[-1]] - trajectory.times[peaks[0]]) / (len(peaks) - 1)
    return float(2.0 * np.pi / spacing)
