"""Quadrature rules and quasi-Monte-Carlo point sets."""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate, stats
from scipy.stats import qmc

from infra.errors import ConvergenceError


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    if n <= 0:
        raise ValueError("n must be positive")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def periodic_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes and weights on [0, 2 pi) for periodic integrands."""
    if n <= 0:
        raise ValueError("n must be positive")
    nodes = 2.0 * math.pi * np.arange(n) / n
    return nodes, np.full(n, 2.0 * math.pi / n)


def gauss_hermite_normal(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for expectations over a standard normal variable."""
    if n <= 0:
        raise ValueError("n must be positive")
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


def qmc_normal_points(
    dim: int, log2_n: int, seed: int, scramble_index: int = 0
) -> np.ndarray:
    """2**log2_n scrambled Sobol points mapped to independent standard normals."""
    if dim <= 0:
        raise ValueError("dim must be positive")
    if log2_n < 0:
        raise ValueError("log2_n must be non-negative")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(scramble_index,))
    sampler = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(sequence))
    u = sampler.random_base2(m=log2_n)
    u = np.clip(u, 1e-16, 1.0 - 1e-16)
    return stats.norm.ppf(u)


def dblquad_checked(
    func: Callable[[float, float], float],
    a: float,
    b: float,
    gfun: Callable[[float], float] | float,
    hfun: Callable[[float], float] | float,
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
) -> tuple[float, float]:
    """scipy dblquad that raises ConvergenceError instead of warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.dblquad(
                func, a, b, gfun, hfun, epsabs=abs_tol, epsrel=rel_tol
            )
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"2-D quadrature did not converge: {exc}") from exc
    return float(value), float(error)
