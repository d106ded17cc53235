"""Validate a spectrum run against the shot-noise floor and the Bessel harmonic ratios."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from runner.outputs import read_csv

FLOOR_TOLERANCE = 0.2
HARMONIC_TOLERANCE = 0.1


@dataclass(frozen=True)
class SpectrumCheck:
    """Measured quantities and pass/fail status of one spectrum run."""

    floor_ratio: float
    harmonic_errors: list[float]
    passed: bool


def _harmonic_errors(run_dir: Path) -> list[float]:
    table = read_csv(run_dir / "harmonics.csv")
    ratio = table.data[:, table.columns.index("ratio")]
    expected = table.data[:, table.columns.index("expected_ratio")]
    errors = []
    for got, want in zip(ratio[1:], expected[1:]):
        # Harmonics that vanish analytically say nothing about the beam.
        if math.isfinite(want) and want > 1e-3:
            errors.append(abs(got / want - 1.0))
    return errors


def validate(run_dir: Path, harmonics: int | None = None) -> SpectrumCheck:
    meta: dict[str, Any] = json.loads((run_dir / "meta.json").read_text())
    floor = (meta.get("summary") or {}).get("noise_floor")
    floor_ratio = float(floor["ratio"]) if isinstance(floor, dict) else math.nan
    errors = _harmonic_errors(run_dir)
    if harmonics is not None:
        errors = errors[: max(0, harmonics - 1)]
    passed = bool(
        math.isfinite(floor_ratio)
        and abs(floor_ratio - 1.0) <= FLOOR_TOLERANCE
        and all(error <= HARMONIC_TOLERANCE for error in errors)
    )
    return SpectrumCheck(floor_ratio=floor_ratio, harmonic_errors=errors, passed=passed)


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Check a spectrum output directory against shot-noise theory."
    )
    parser.add_argument("run_dir", help="directory holding meta.json and the spectrum tables")
    parser.add_argument("--harmonics", type=int, default=None, help="harmonics to compare")
    args = parser.parse_args()

    run_dir = Path(args.run_dir)
    if not (run_dir / "meta.json").exists() or not (run_dir / "harmonics.csv").exists():
        print(f"Spectrum output not found: {run_dir}")
        return 2

    result = validate(run_dir, args.harmonics)
    print(
        json.dumps(
            {
                "floor_ratio": result.floor_ratio,
                "harmonic_errors": result.harmonic_errors,
                "passed": result.passed,
            },
            indent=2,
        )
    )
    return 0 if result.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
