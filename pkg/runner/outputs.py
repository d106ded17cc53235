"""CSV tables and run metadata written next to each other in the output directory."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import scipy

CSV_DIGITS = 12


@dataclass(frozen=True)
class Table:
    """Named column table; data has one column per entry of columns."""

    name: str
    columns: list[str]
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise ValueError("data must be 2-D with one column per name")

    @classmethod
    def from_columns(cls, name: str, **columns: np.ndarray) -> Table:
        arrays = [np.asarray(values, dtype=float).ravel() for values in columns.values()]
        return cls(name, list(columns), np.column_stack(arrays))


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_hash(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def package_versions() -> dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null and complex numbers [re, im]."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return jsonable(value.item())
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_csv(out_dir: Path, table: Table) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{table.name}.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(table.columns)
        for row in table.data:
            writer.writerow([format(float(value), f".{CSV_DIGITS}g") for value in row])
    return path


def read_csv(path: Path) -> Table:
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ValueError(f"{path} is empty")
    data = np.array([[float(value) for value in row] for row in rows[1:]], dtype=float)
    return Table(path.stem, rows[0], data.reshape(-1, len(rows[0])))


def write_meta(out_dir: Path, meta: dict[str, Any]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "meta.json"
    path.write_text(json.dumps(jsonable(meta), indent=2, sort_keys=True) + "\n")
    return path
