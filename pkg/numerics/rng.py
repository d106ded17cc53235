"""Counter-based reproducible random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """Philox stream keyed by (seed, stream_id, path).

    Streams with different ids or derivation paths are independent by
    construction of the seed sequence spawn keys, so chunks and realizations
    may run in any order on any worker.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.seed < _U64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.stream_id < _U64:
            raise ValueError("stream_id must be a 64-bit unsigned integer")

    def derive(self, index: int) -> RngStream:
        """Child stream for chunk or realization number index."""
        if index < 0:
            raise ValueError("index must be non-negative")
        return RngStream(self.seed, self.stream_id, self.path + (index,))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self.path)
        )
        return np.random.Generator(np.random.Philox(sequence))

    def describe(self) -> dict[str, object]:
        return {"seed": self.seed, "stream_id": self.stream_id, "path": list(self.path)}
