"""Outer momentum sampling and the reduction of scattered-state integrals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from infra.parallel import ordered_map
from numerics.quadrature import gauss_hermite_normal, qmc_normal_points
from qed.kernels import (
    InnerGrid,
    OuterGeometry,
    dispersion_phase,
    incoming_amplitude,
    inner_grid,
    outer_geometry,
)
from qed.params import DimensionlessParams, GridResolution

logger = logging.getLogger("klystron")

# proposal standard deviation per outer axis; the envelopes have 1/2
PROPOSAL_SIGMA = math.sqrt(0.5)

AmplitudeKernel = Callable[
    [DimensionlessParams, OuterGeometry, InnerGrid, float], tuple[np.ndarray, np.ndarray]
]


@dataclass(frozen=True)
class OuterSamples:
    """Outer points (N, 3) as (u, pi'_x, pi'_y) with integration weights."""

    points: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class ChannelSums:
    """Raw momentum integrals of one sample set.

    conserving and flip hold sum |amplitude|^2 per incoming spin; overlap is
    the spin-averaged projection on the incoming packet including the
    residual phase; incoming is the norm of the incoming packet.
    """

    conserving: np.ndarray
    flip: np.ndarray
    overlap: complex
    incoming: float

    @property
    def total(self) -> np.ndarray:
        return self.conserving + self.flip

    @property
    def normalized_overlap(self) -> complex:
        norm = math.sqrt(self.incoming * float(np.mean(self.total)))
        if norm == 0.0:
            return 0j
        return self.overlap / norm


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error: float
    samples: int


def _proposal_density(points: np.ndarray) -> np.ndarray:
    scaled = points / PROPOSAL_SIGMA
    norm = (PROPOSAL_SIGMA * math.sqrt(2.0 * math.pi)) ** points.shape[1]
    return np.exp(-0.5 * np.sum(scaled * scaled, axis=1)) / norm


def _mirror(points: np.ndarray, rho_offset: tuple[float, float]) -> np.ndarray:
    """Reflect pi'_perp across the offset direction (x axis mirror at zero offset)."""
    rho = math.hypot(*rho_offset)
    if rho == 0.0:
        nx, ny = 0.0, 1.0
    else:
        nx, ny = rho_offset[0] / rho, rho_offset[1] / rho
    px = points[:, 1]
    py = points[:, 2]
    along = px * nx + py * ny
    out = points.copy()
    out[:, 1] = 2.0 * along * nx - px
    out[:, 2] = 2.0 * along * ny - py
    return out


def _with_mirror(
    points: np.ndarray, weights: np.ndarray, dp: DimensionlessParams
) -> OuterSamples:
    both = np.concatenate([points, _mirror(points, dp.rho_offset)])
    return OuterSamples(both, 0.5 * np.concatenate([weights, weights]))


def _truncate(samples: OuterSamples, truncation: float) -> OuterSamples:
    """Zero the weight of points outside |u| <= n and |pi'_perp| <= n."""
    u = samples.points[:, 0]
    perp = np.hypot(samples.points[:, 1], samples.points[:, 2])
    keep = (np.abs(u) <= truncation) & (perp <= truncation)
    return OuterSamples(samples.points, np.where(keep, samples.weights, 0.0))


def qmc_outer_samples(
    dp: DimensionlessParams, grid: GridResolution, scramble: int
) -> OuterSamples:
    """Importance-sampled scrambled Sobol points, mirrored across the offset line."""
    normals = qmc_normal_points(3, grid.log2_samples, grid.seed, scramble)
    points = PROPOSAL_SIGMA * normals
    weights = 1.0 / (points.shape[0] * _proposal_density(points))
    return _truncate(_with_mirror(points, weights, dp), grid.truncation)


def tensor_outer_samples(
    dp: DimensionlessParams, nodes: int, truncation: float
) -> OuterSamples:
    """Gauss-Hermite product grid for cross-checking the sampled integrals."""
    x, w = gauss_hermite_normal(nodes)
    axis = PROPOSAL_SIGMA * x
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    prob = np.einsum("i,j,k->ijk", w, w, w).ravel()
    weights = prob / _proposal_density(grid)
    return _truncate(OuterSamples(grid, weights), truncation)


def channel_sums(
    dp: DimensionlessParams,
    kernel: AmplitudeKernel,
    samples: OuterSamples,
    grid: GridResolution,
    omega_t: float,
    workers: int = 1,
) -> ChannelSums:
    """Evaluate a kernel on all outer samples and reduce in fixed chunk order."""
    active = np.nonzero(samples.weights > 0)[0]
    starts = list(range(0, active.size, grid.chunk))

    def run(start: int) -> tuple[np.ndarray, np.ndarray, complex, float]:
        idx = active[start : start + grid.chunk]
        pts = samples.points[idx]
        outer = outer_geometry(dp, pts[:, 0], pts[:, 1:], omega_t)
        inner = inner_grid(
            dp, outer, omega_t, grid.radial_nodes, grid.angular_nodes, grid.truncation
        )
        cons, flip = kernel(dp, outer, inner, omega_t)
        weight = samples.weights[idx] * outer.jacobian
        incoming = incoming_amplitude(dp, outer)
        phase = np.exp(1j * dispersion_phase(dp, outer, omega_t))
        projection = np.conj(incoming) * 0.5 * (cons[0] + cons[1]) * phase
        return (
            np.abs(cons) ** 2 @ weight,
            np.abs(flip) ** 2 @ weight,
            complex(np.sum(weight * projection)),
            float(np.sum(weight * np.abs(incoming) ** 2)),
        )

    parts = ordered_map(run, starts, workers)
    conserving = np.zeros(2)
    flip = np.zeros(2)
    overlap = 0j
    incoming = 0.0
    for part_cons, part_flip, part_overlap, part_in in parts:
        conserving = conserving + part_cons
        flip = flip + part_flip
        overlap += part_overlap
        incoming += part_in
    return ChannelSums(conserving, flip, overlap, incoming)


def scrambled_sums(
    dp: DimensionlessParams,
    kernel: AmplitudeKernel,
    grid: GridResolution,
    omega_t: float,
    workers: int = 1,
) -> list[ChannelSums]:
    """One ChannelSums per scramble, or two nested tensor grids in tensor mode.

    In tensor mode the second entry uses four fewer nodes per axis so the
    spread between entries serves as the error estimate.
    """
    if grid.tensor_grid:
        sets = [
            tensor_outer_samples(dp, grid.hermite_nodes, grid.truncation),
            tensor_outer_samples(dp, grid.hermite_nodes - 4, grid.truncation),
        ]
    else:
        sets = [qmc_outer_samples(dp, grid, index) for index in range(grid.scrambles)]
    results = [channel_sums(dp, kernel, samples, grid, omega_t, workers) for samples in sets]
    logger.info(
        "scattering integrals evaluated",
        extra={
            "event_type": "qed",
            "metadata": {"sets": len(sets), "samples": int(sum(len(s) for s in sets))},
        },
    )
    return results


def estimate(values: list[float], samples: int, tensor: bool = False) -> IntegralEstimate:
    """Mean and standard error across scrambles; tensor mode reports the nested spread."""
    data = np.asarray(values, dtype=float)
    if tensor:
        return IntegralEstimate(float(data[0]), float(abs(data[0] - data[1])), samples)
    error = float(np.std(data, ddof=1) / math.sqrt(data.size))
    return IntegralEstimate(float(np.mean(data)), error, samples)


def sample_count(grid: GridResolution) -> int:
    if grid.tensor_grid:
        return grid.hermite_nodes**3 + (grid.hermite_nodes - 4) ** 3
    return 2 * grid.scrambles * 2**grid.log2_samples
