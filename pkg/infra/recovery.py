"""Retry primitives for refining numerical work that missed its tolerance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TypeVar

from infra.errors import ConvergenceError

T = TypeVar("T")


@dataclass(frozen=True)
class RefinementSchedule:
    """Geometric growth of a sample budget across retry attempts."""

    factor: float = 2.0

    def __post_init__(self) -> None:
        if self.factor < 1.0:
            raise ValueError("factor must be >= 1")

    def scale_for_attempt(self, attempt: int) -> int:
        """Multiplier applied to a sample budget on the given attempt."""
        return int(round(self.factor ** max(0, attempt - 1)))


def retry_operation(
    operation: Callable[[int], T],
    *,
    should_retry: Callable[[Exception], bool],
    max_attempts: int,
    on_retry: Callable[[int, Exception], None] | None = None,
) -> T:
    """Retry an operation, passing the attempt number so it can refine itself."""
    if max_attempts <= 0:
        raise ValueError("max_attempts must be positive")
    last_error: Exception | None = None
    for attempt in range(1, max_attempts + 1):
        try:
            return operation(attempt)
        except Exception as exc:  # noqa: BLE001
            if not should_retry(exc):
                raise
            last_error = exc
            if attempt == max_attempts:
                break
            if on_retry is not None:
                on_retry(attempt, exc)
    assert last_error is not None
    raise last_error


def is_refinable_error(exc: Exception) -> bool:
    return isinstance(exc, ConvergenceError)
