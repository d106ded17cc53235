"""Bessel functions J_n, K_0 and K_1 used by the beam and interaction models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from infra.errors import DomainError

EULER_GAMMA = 0.57721566490153286061
_EPS = float(np.finfo(float).eps)

J_MAX_ARGUMENT = 700.0
_J_SERIES_LIMIT = 8.0
_K_SERIES_LIMIT = 2.0
_K_SERIES_TERMS = 30
_K_STEP = 0.1
_K_EXPONENT_CUTOFF = 750.0
_RESCALE = 1.0e250


@dataclass(frozen=True)
class SpecialFnResult:
    """Function value with an estimated absolute error."""

    value: float
    est_abs_error: float


def bessel_j(n: int, x: float) -> SpecialFnResult:
    """Bessel function of the first kind J_n(x) for integer n >= 0."""
    if n < 0:
        raise DomainError("order must be non-negative")
    if not math.isfinite(x) or abs(x) > J_MAX_ARGUMENT:
        raise DomainError(f"|x| must not exceed {J_MAX_ARGUMENT}")
    ax = abs(x)
    if ax == 0.0:
        return SpecialFnResult(1.0 if n == 0 else 0.0, 0.0)
    if ax <= _J_SERIES_LIMIT:
        value, error = _j_series(n, ax)
    else:
        value, error = _j_miller(n, ax)
    if x < 0 and n % 2 == 1:
        value = -value
    return SpecialFnResult(value, error)


def _j_series(n: int, x: float) -> tuple[float, float]:
    half = 0.5 * x
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
    total = term
    magnitude = abs(term)
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        magnitude += abs(term)
        if abs(term) <= _EPS * abs(total) * 1e-2 or term == 0.0:
            break
    return total, 4.0 * _EPS * magnitude


def _j_miller(n: int, x: float) -> tuple[float, float]:
    """Backward recurrence normalized by J_0 + 2 * sum J_2k = 1."""
    top = max(n, int(x))
    m = top + 30 + int(math.sqrt(60.0 * top))
    m += m % 2
    two_over_x = 2.0 / x
    f_next = 0.0
    f_curr = 1.0e-30
    even_sum = 0.0
    answer = 0.0
    for j in range(m, 0, -1):
        f_prev = j * two_over_x * f_curr - f_next
        f_next, f_curr = f_curr, f_prev
        if abs(f_curr) > _RESCALE:
            f_curr /= _RESCALE
            f_next /= _RESCALE
            even_sum /= _RESCALE
            answer /= _RESCALE
        index = j - 1
        if index == n:
            answer = f_curr
        if index > 0 and index % 2 == 0:
            even_sum += f_curr
    norm = f_curr + 2.0 * even_sum
    value = answer / norm
    return value, 8.0 * m * _EPS * max(abs(value), 1e-16)


def bessel_k(order: int, x: float) -> SpecialFnResult:
    """Modified Bessel function of the second kind K_0 or K_1 for x > 0."""
    values = bessel_k_array(order, np.array([x], dtype=float))
    value = float(values[0])
    return SpecialFnResult(value, 16.0 * _EPS * abs(value))


def bessel_k_array(order: int, x: np.ndarray) -> np.ndarray:
    """Vectorized K_0 or K_1; series below x = 2, trapezoid integral above."""
    if order not in (0, 1):
        raise DomainError("order must be 0 or 1")
    xs = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xs)) or np.any(xs <= 0.0):
        raise DomainError("x must be positive and finite")
    out = np.empty_like(xs)
    small = xs <= _K_SERIES_LIMIT
    if np.any(small):
        out[small] = _k_series(order, xs[small])
    if np.any(~small):
        out[~small] = _k_integral(order, xs[~small])
    return out


def _k_series(order: int, x: np.ndarray) -> np.ndarray:
    q = 0.25 * x * x
    log_half = np.log(0.5 * x)
    if order == 0:
        # K0 = -(ln(x/2) + gamma) I0 + sum q^k/(k!)^2 H_k
        term = np.ones_like(x)
        i0 = np.ones_like(x)
        tail = np.zeros_like(x)
        harmonic = 0.0
        for k in range(1, _K_SERIES_TERMS):
            term = term * q / (k * k)
            harmonic += 1.0 / k
            i0 = i0 + term
            tail = tail + term * harmonic
        return -(log_half + EULER_GAMMA) * i0 + tail
    # K1 = 1/x + ln(x/2) I1 - (x/4) sum (psi(k+1)+psi(k+2)) q^k/(k!(k+1)!)
    term = np.ones_like(x)
    psi_k1 = -EULER_GAMMA
    psi_k2 = 1.0 - EULER_GAMMA
    i1_sum = term.copy()
    psi_sum = term * (psi_k1 + psi_k2)
    for k in range(1, _K_SERIES_TERMS):
        term = term * q / (k * (k + 1))
        psi_k1 += 1.0 / k
        psi_k2 += 1.0 / (k + 1)
        i1_sum = i1_sum + term
        psi_sum = psi_sum + term * (psi_k1 + psi_k2)
    i1 = 0.5 * x * i1_sum
    return 1.0 / x + log_half * i1 - 0.25 * x * psi_sum


def _k_integral(order: int, x: np.ndarray) -> np.ndarray:
    """K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoid rule."""
    t_max = math.acosh(_K_EXPONENT_CUTOFF / float(np.min(x)) + 1.0)
    # the peak at t = 0 narrows like x**-0.5
    step = min(_K_STEP, 0.5 / math.sqrt(float(np.max(x))))
    nodes = step * np.arange(int(math.ceil(t_max / step)) + 1)
    weights = np.full(nodes.shape, step)
    weights[0] *= 0.5
    if order == 1:
        weights = weights * np.cosh(nodes)
    cosh_t = np.cosh(nodes)
    out = np.empty_like(x)
    chunk = 4096
    for start in range(0, x.size, chunk):
        block = x[start : start + chunk]
        out[start : start + chunk] = np.exp(-block[:, None] * cosh_t[None, :]) @ weights
    return out
