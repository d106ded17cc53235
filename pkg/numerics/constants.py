"""CODATA 2018 physical constants in SI units."""

from __future__ import annotations

import math

ELEMENTARY_CHARGE = 1.602176634e-19  # C
ELECTRON_MASS = 9.1093837015e-31  # kg
HBAR = 1.054571817e-34  # J s
SPEED_OF_LIGHT = 299792458.0  # m/s
VACUUM_PERMEABILITY = 1.25663706212e-6  # N/A^2
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
BOHR_MAGNETON = 9.2740100783e-24  # J/T
CLASSICAL_ELECTRON_RADIUS = 2.8179403262e-15  # m
BOHR_RADIUS = 5.29177210903e-11  # m
COMPTON_WAVELENGTH = 2.42631023867e-12  # m
FINE_STRUCTURE = 7.2973525693e-3
ELECTRON_G_FACTOR = 2.00231930436256  # |g_S|
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
ELECTRON_REST_ENERGY_EV = 510998.95

POTASSIUM_41_MASS = 40.9618252579 * ATOMIC_MASS_UNIT

TWO_PI = 2.0 * math.pi
