"""Integrands of the dispersion-free scattered electron state.

Outer variables are (u, pi'_x, pi'_y) where u = pi_z,sol(pi_perp = 0) - pi_z0;
this flattens the energy shell so the longitudinal envelope sits at u = 0.
The inner transverse integral is taken on polar coordinates (q, alpha)
around pi'_perp. All amplitudes are divided by the prefactor F.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from infra.errors import DomainError
from numerics.quadrature import gauss_legendre, periodic_nodes
from qed.params import DimensionlessParams

# spin s = +1/2 first, then s = -1/2
SPIN_SIGNS = np.array([1.0, -1.0])


@dataclass(frozen=True)
class OuterGeometry:
    """Energy-shell quantities of a batch of outer samples, shape (B,)."""

    shell: np.ndarray
    energy: np.ndarray
    pz: np.ndarray
    pz_shift: np.ndarray
    jacobian: np.ndarray
    perp: np.ndarray


@dataclass(frozen=True)
class InnerGrid:
    """Polar grid around pi'_perp with the shared envelope, shape (B, nr, na)."""

    px: np.ndarray
    py: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    pz_sol: np.ndarray
    dz: np.ndarray
    envelope: np.ndarray


def outer_geometry(
    dp: DimensionlessParams, u: np.ndarray, perp: np.ndarray, omega_t: float
) -> OuterGeometry:
    """Map (u, pi'_perp) onto the outgoing momentum with its volume Jacobian.

    omega_t is +Omega0 for emission and -Omega0 for absorption.
    """
    shell = dp.pi_z0 + u
    if np.any(shell <= 0):
        raise DomainError("outer sample left the forward momentum shell")
    rest = np.sqrt(shell * shell + dp.mass * dp.mass)
    energy = omega_t + rest
    perp_sq = np.sum(perp * perp, axis=-1)
    # pz'^2 - A^2 without cancelling the large mass terms
    excess = omega_t * omega_t + 2.0 * omega_t * rest - dp.xi**2 * perp_sq
    pz_sq = shell * shell + excess
    if np.any(pz_sq <= 0):
        raise DomainError("outgoing momentum is not forward")
    pz = np.sqrt(pz_sq)
    pz_shift = u + excess / (pz + shell)
    jacobian = (energy / pz) * (shell / rest)
    return OuterGeometry(shell, energy, pz, pz_shift, jacobian, perp)


def inner_grid(
    dp: DimensionlessParams,
    outer: OuterGeometry,
    omega_t: float,
    radial_nodes: int,
    angular_nodes: int,
    truncation: float,
) -> InnerGrid:
    """Polar quadrature around pi'_perp reaching |pi_perp| = truncation."""
    t, wt = gauss_legendre(radial_nodes, 0.0, 1.0)
    alpha, wa = periodic_nodes(angular_nodes)
    reach = np.hypot(outer.perp[:, 0], outer.perp[:, 1]) + truncation
    q = reach[:, None, None] * t[None, :, None]
    weights = (reach[:, None, None] * wt[None, :, None]) * wa[None, None, :] * q
    dx = -q * np.cos(alpha)[None, None, :]
    dy = -q * np.sin(alpha)[None, None, :]
    ppx = outer.perp[:, 0, None, None]
    ppy = outer.perp[:, 1, None, None]
    px = ppx - dx
    py = ppy - dy
    perp_sq = px * px + py * py
    xi_sq = dp.xi**2
    shell = outer.shell[:, None, None]
    sol_sq = shell * shell - xi_sq * perp_sq
    if np.any(sol_sq <= 0):
        raise DomainError("inner grid reaches beyond the energy shell")
    pz_sol = np.sqrt(sol_sq)
    rest = np.sqrt(shell * shell + dp.mass * dp.mass)
    pz = outer.pz[:, None, None]
    prime_sq = ppx * ppx + ppy * ppy
    dz = (omega_t * omega_t + 2.0 * omega_t * rest + xi_sq * (perp_sq - prime_sq)) / (
        pz + pz_sol
    )
    a_bar_sq = (dz * dz - omega_t * omega_t) / xi_sq
    q_sq = q * q
    offset = outer.shell[:, None, None] - dp.pi_z0 - xi_sq * perp_sq / (shell + pz_sol)
    rho_x, rho_y = dp.rho_offset
    envelope = (
        np.exp(-offset * offset - perp_sq - 1j * (px * rho_x + py * rho_y))
        * weights
        / (a_bar_sq + q_sq)
    )
    return InnerGrid(px, py, dx, dy, pz_sol, dz, envelope)


def _sum_inner(values: np.ndarray) -> np.ndarray:
    return values.sum(axis=(-2, -1))


def magnetic_amplitudes(
    dp: DimensionlessParams,
    outer: OuterGeometry,
    grid: InnerGrid,
    omega_t: float,
    moment: tuple[float, float],
) -> tuple[np.ndarray, np.ndarray]:
    """Spin-conserving and spin-flip amplitudes for a transverse unit moment.

    Returns two (2, B) arrays indexed by the incoming spin.
    """
    mx, my = moment
    ratio = grid.dz / grid.pz_sol
    # w = pi'_perp - pi_perp pz' / pz_sol
    wx = grid.dx - grid.px * ratio
    wy = grid.dy - grid.py * ratio
    along = grid.dx * mx + grid.dy * my
    env = grid.envelope
    cross = _sum_inner(env * 2.0 * (mx * wy - my * wx))
    spin_term = _sum_inner(env * ratio * along)
    shell_factor = np.sqrt((outer.energy - omega_t) / outer.energy)

    xi_sq = dp.xi**2
    scale = 1.0 / (dp.xi * grid.pz_sol)
    size = grid.dz * grid.dz + xi_sq * (grid.dx * grid.dx + grid.dy * grid.dy)
    flip_real = _sum_inner(env * scale * (size * mx - xi_sq * along * grid.dx))
    flip_imag = _sum_inner(env * scale * (size * my - xi_sq * along * grid.dy))

    cons = np.empty((2,) + cross.shape, dtype=complex)
    flip = np.empty_like(cons)
    for index, sigma in enumerate(SPIN_SIGNS):
        cons[index] = shell_factor * (cross - 1j * sigma * spin_term)
        flip[index] = shell_factor * 1j * (flip_real + 1j * sigma * flip_imag)
    return cons, flip


def electric_amplitudes(
    dp: DimensionlessParams,
    outer: OuterGeometry,
    grid: InnerGrid,
    omega_t: float,
    dipole: tuple[float, float, float],
) -> tuple[np.ndarray, np.ndarray]:
    """Spin-conserving and spin-flip amplitudes for a unit transition dipole."""
    d_x, d_y, d_z = dipole
    inv_xi = 1.0 / dp.xi
    inv_sol = 1.0 / grid.pz_sol
    energy = outer.energy[:, None, None]
    pz = outer.pz[:, None, None]
    ppx = outer.perp[:, 0, None, None]
    ppy = outer.perp[:, 1, None, None]
    env = grid.envelope

    longitudinal = inv_xi * (-omega_t * (pz + grid.pz_sol) + 2.0 * energy * grid.dz) * d_z
    transverse = (-omega_t * (ppx + grid.px) + 2.0 * energy * grid.dx) * d_x + (
        -omega_t * (ppy + grid.py) + 2.0 * energy * grid.dy
    ) * d_y
    base = _sum_inner(env * inv_sol * (longitudinal + transverse))
    curl = _sum_inner(env * inv_sol * omega_t * (d_x * grid.dy - d_y * grid.dx))

    flip_even = _sum_inner(env * inv_sol * (-inv_xi * d_y * grid.dz + d_z * grid.dy))
    flip_odd = _sum_inner(env * inv_sol * (inv_xi * d_x * grid.dz - d_z * grid.dx))

    cons = np.empty((2,) + base.shape, dtype=complex)
    flip = np.empty_like(cons)
    for index, sigma in enumerate(SPIN_SIGNS):
        cons[index] = -(base + 1j * sigma * curl)
        flip[index] = 1j * omega_t * (flip_even + 1j * sigma * flip_odd)
    return cons, flip


def incoming_amplitude(dp: DimensionlessParams, outer: OuterGeometry) -> np.ndarray:
    """Un-dispersed incoming packet at the outer samples."""
    rho_x, rho_y = dp.rho_offset
    px = outer.perp[:, 0]
    py = outer.perp[:, 1]
    return np.exp(
        -outer.pz_shift**2 - (px * px + py * py) - 1j * (px * rho_x + py * rho_y)
    )


def dispersion_phase(
    dp: DimensionlessParams, outer: OuterGeometry, omega_t: float
) -> np.ndarray:
    """Residual phase Omega0 l (c/v - Omega'/sqrt(Omega'^2 - M^2)) at tau0 = 0."""
    momentum = np.sqrt(outer.pz**2 + dp.xi**2 * np.sum(outer.perp**2, axis=-1))
    return omega_t * dp.l_tilde * (dp.inverse_beta - outer.energy / momentum)
