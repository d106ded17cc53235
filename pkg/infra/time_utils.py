"""Clock helpers for run metadata and log records."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable


def utc_timestamp() -> str:
    """Return the current UTC time as an ISO-8601 string."""
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Stopwatch:
    """Wall-clock stamp of when a run began plus monotonic elapsed seconds."""

    clock: Callable[[], float] = time.monotonic
    started_at: str = field(default_factory=utc_timestamp)
    _start: float = field(init=False)

    def __post_init__(self) -> None:
        self._start = self.clock()

    def elapsed(self) -> float:
        return max(0.0, self.clock() - self._start)
