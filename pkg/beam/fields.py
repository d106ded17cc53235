"""Mean magnetic near field of a slowly modulated beam.

Coordinates: (x, y) is the field point relative to the beam axis and the
electrons travel along +z, so the field of a positive current magnitude I is
mu0 I / (2 pi d^2) * (y, -x, 0).
"""

from __future__ import annotations

import math

import numpy as np

from infra.errors import DomainError
from numerics.constants import VACUUM_PERMEABILITY
from numerics.quadrature import dblquad_checked

GAUSSIAN_CUTOFF_WAISTS = 6.0


def thin_beam_field(current: float, x: float, y: float) -> np.ndarray:
    """Field of an infinitely thin beam, returned as (Bx, By, Bz) in tesla."""
    d_sq = x * x + y * y
    if d_sq == 0.0:
        raise DomainError("field point lies on the beam axis")
    scale = VACUUM_PERMEABILITY * current / (2.0 * math.pi * d_sq)
    return np.array([scale * y, -scale * x, 0.0])


def gaussian_beam_field(
    current: float,
    waist: float,
    offset: tuple[float, float],
    rel_tol: float = 1e-8,
) -> np.ndarray:
    """Field of a beam with current density proportional to exp(-2 r^2 / w^2).

    The integral runs in polar coordinates (rho, psi) centred on the field
    point, where the 1/rho kernel cancels against the area element.
    """
    if waist <= 0:
        raise ValueError("waist must be positive")
    x0, y0 = offset
    d = math.hypot(x0, y0)
    if d == 0.0 or current == 0.0:
        return np.zeros(3)

    psi0 = math.atan2(y0, x0)
    reach = GAUSSIAN_CUTOFF_WAISTS * waist
    rho_lo = max(0.0, d - reach)
    rho_hi = d + reach
    if d > reach:
        half_angle = math.asin(reach / d)
        psi_lo, psi_hi = psi0 - half_angle, psi0 + half_angle
    else:
        psi_lo, psi_hi = psi0 - math.pi, psi0 + math.pi
    inv_w_sq = 2.0 / (waist * waist)

    def density(rho: float, psi: float) -> float:
        # source at r0 - s with s = rho (cos psi, sin psi) pointing at the field point
        dist_sq = d * d + rho * rho - 2.0 * rho * d * math.cos(psi - psi0)
        return math.exp(-inv_w_sq * dist_sq)

    prefactor = VACUUM_PERMEABILITY * current / (math.pi**2 * waist * waist)
    field_scale = VACUUM_PERMEABILITY * current / (2.0 * math.pi * max(d, waist))
    abs_tol = 1e-10 * abs(field_scale / prefactor)
    bx, _ = dblquad_checked(
        lambda rho, psi: density(rho, psi) * math.sin(psi),
        psi_lo,
        psi_hi,
        rho_lo,
        rho_hi,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
    by, _ = dblquad_checked(
        lambda rho, psi: -density(rho, psi) * math.cos(psi),
        psi_lo,
        psi_hi,
        rho_lo,
        rho_hi,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
    return np.array([prefactor * bx, prefactor * by, 0.0])


def gaussian_beam_field_exact_radial(current: float, waist: float, d: float) -> float:
    """Ampere's-law magnitude: thin-beam field times the enclosed current fraction."""
    if d <= 0:
        raise DomainError("distance must be positive")
    enclosed = -math.expm1(-2.0 * d * d / (waist * waist))
    return VACUUM_PERMEABILITY * current / (2.0 * math.pi * d) * enclosed
