"""Adaptive Dormand-Prince 5(4) integrator for real or complex state vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from infra.errors import ConvergenceError

Rhs = Callable[[float, np.ndarray], np.ndarray]

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array(_A[6] + [0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class OdeSolution:
    """States at the requested output times."""

    t: np.ndarray
    y: np.ndarray
    n_steps: int
    n_rejected: int


def integrate_ode(
    rhs: Rhs,
    t0: float,
    t1: float,
    y0: Sequence[complex] | np.ndarray,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    t_eval: Sequence[float] | np.ndarray | None = None,
    first_step: float | None = None,
    max_steps: int = 1_000_000,
) -> OdeSolution:
    """Integrate y' = rhs(t, y) from t0 to t1, stepping exactly onto t_eval points."""
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    y = np.array(y0, copy=True)
    if y.dtype.kind not in "fc":
        y = y.astype(float)
    outputs = _output_times(t0, t1, t_eval)
    out_y = np.empty((outputs.size,) + y.shape, dtype=y.dtype)

    t = float(t0)
    out_index = 0
    while out_index < outputs.size and outputs[out_index] <= t:
        out_y[out_index] = y
        out_index += 1

    if t1 == t0:
        return OdeSolution(outputs, out_y, 0, 0)

    k1 = np.asarray(rhs(t, y))
    if first_step is not None:
        h = first_step
    else:
        h = _initial_step(rhs, t, y, k1, t1 - t0, rel_tol, abs_tol)
    n_steps = 0
    n_rejected = 0
    stages = np.empty((7,) + y.shape, dtype=np.result_type(y, k1))

    while out_index < outputs.size:
        if n_steps + n_rejected >= max_steps:
            raise ConvergenceError(
                "maximum number of steps exceeded", partial=out_y[:out_index], last_time=t
            )
        target = outputs[out_index]
        h = min(h, target - t)
        if h <= 16.0 * np.finfo(float).eps * max(abs(t), 1e-300):
            raise ConvergenceError(
                f"step size underflow at t={t:.6e}", partial=out_y[:out_index], last_time=t
            )

        stages[0] = k1
        for i in range(1, 7):
            increment = sum(a * stages[j] for j, a in enumerate(_A[i]) if a != 0.0)
            stages[i] = rhs(t + _C[i] * h, y + h * increment)
        y_new = y + h * np.tensordot(_B5, stages, axes=1)
        err_vec = h * np.tensordot(_E, stages, axes=1)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))

        if err <= 1.0:
            t = target if h == target - t else t + h
            y = y_new
            k1 = stages[6]
            n_steps += 1
            while out_index < outputs.size and outputs[out_index] <= t:
                out_y[out_index] = y
                out_index += 1
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        else:
            n_rejected += 1
            factor = max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        h *= factor

    return OdeSolution(outputs, out_y, n_steps, n_rejected)


def _output_times(
    t0: float, t1: float, t_eval: Sequence[float] | np.ndarray | None
) -> np.ndarray:
    if t_eval is None:
        return np.array([t0, t1], dtype=float)
    times = np.asarray(t_eval, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("t_eval must be a non-empty 1-D sequence")
    if np.any(np.diff(times) < 0):
        raise ValueError("t_eval must be non-decreasing")
    if times[0] < t0 or times[-1] > t1:
        raise ValueError("t_eval must lie within [t0, t1]")
    return times


def _initial_step(
    rhs: Rhs,
    t: float,
    y: np.ndarray,
    f0: np.ndarray,
    span: float,
    rel_tol: float,
    abs_tol: float,
) -> float:
    scale = abs_tol + np.abs(y) * rel_tol
    d0 = float(np.sqrt(np.mean(np.abs(y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean(np.abs(f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = np.asarray(rhs(t + h0, y + h0 * f0))
    d2 = float(np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)
