"""Density-matrix change caused by one scattered electron."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from bloch.state import REPAIR_TOL, BlochState, repaired


@dataclass(frozen=True)
class ScatterChannel:
    """Transition probability P with the electron-state overlaps lambda1, lambda2.

    lambda1 = e^{i phi} and lambda2 = e^{-2 i phi} describe an electron that
    leaves essentially unchanged up to the phase phi = omega0 t; both vanish
    when the scattered electron state is orthogonal to the incoming one.
    """

    probability: float
    lambda1: complex = 0j
    lambda2: complex = 0j

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must be in [0, 1]")
        if abs(self.lambda1) > 1.0 + 1e-12 or abs(self.lambda2) > 1.0 + 1e-12:
            raise ValueError("overlaps must not exceed 1 in magnitude")

    def matrix(self) -> np.ndarray:
        """4x4 update acting on (rho_eg, rho_ge, rho_ee, rho_gg)."""
        p = self.probability
        root = math.sqrt(p)
        l1 = self.lambda1
        l1c = l1.conjugate()
        l2 = self.lambda2
        return np.array(
            [
                [-p, p * l2, -1j * l1c * root, 1j * l1c * root],
                [p * l2.conjugate(), -p, 1j * l1 * root, -1j * l1 * root],
                [-1j * l1 * root, 1j * l1c * root, -p, p],
                [1j * l1 * root, -1j * l1c * root, p, -p],
            ],
            dtype=complex,
        )


def coherent_channel(probability: float, phase: float) -> ScatterChannel:
    return ScatterChannel(probability, cmath.exp(1j * phase), cmath.exp(-2j * phase))


def incoherent_channel(probability: float) -> ScatterChannel:
    return ScatterChannel(probability)


def single_scatter_update(
    state: BlochState, channel: ScatterChannel, repair_tol: float = REPAIR_TOL
) -> BlochState:
    """Apply rho -> rho + M rho; float-noise violations up to repair_tol are projected away."""
    vector = state.vector()
    updated = vector + channel.matrix() @ vector
    return repaired(BlochState.from_vector(updated), repair_tol)


def iterate_scatter(state: BlochState, channels: list[ScatterChannel]) -> np.ndarray:
    """Apply channels in order without repair; returns the (len + 1, 4) vector history."""
    history = np.empty((len(channels) + 1, 4), dtype=complex)
    history[0] = state.vector()
    for index, channel in enumerate(channels):
        current = history[index]
        history[index + 1] = current + channel.matrix() @ current
    return history
