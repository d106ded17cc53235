"""Process-level settings for the klystron simulator."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

_TRUE_VALUES = {"1", "true", "yes", "on"}


@dataclass(frozen=True)
class Settings:
    """Runtime settings loaded from environment variables."""

    log_path: str = "klystron.log"
    workers: int = 1
    out_dir: str = "out"
    full_scale: bool = False
    max_refinements: int = 3


def load_dotenv(path: str = ".env") -> None:
    """Load .env key-value pairs into environment without overriding existing values."""
    env_path = Path(path)
    if not env_path.exists():
        return

    for line in env_path.read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, value = stripped.split("=", 1)
        os.environ.setdefault(key.strip(), value.strip())


def load_settings(env: Mapping[str, str] | None = None) -> Settings:
    """Load and validate runtime settings from environment."""
    source = os.environ if env is None else env
    settings = Settings(
        log_path=source.get("KLYSTRON_LOG_PATH", "klystron.log"),
        workers=int(source.get("KLYSTRON_WORKERS", 1)),
        out_dir=source.get("KLYSTRON_OUT_DIR", "out"),
        full_scale=source.get("KLYSTRON_FULL_SCALE", "0").strip().lower()
        in _TRUE_VALUES,
        max_refinements=int(source.get("KLYSTRON_MAX_REFINEMENTS", 3)),
    )
    _validate(settings)
    return settings


def _validate(settings: Settings) -> None:
    if not settings.log_path:
        raise ValueError("KLYSTRON_LOG_PATH must not be empty")
    if settings.workers <= 0:
        raise ValueError("KLYSTRON_WORKERS must be positive")
    if not settings.out_dir:
        raise ValueError("KLYSTRON_OUT_DIR must not be empty")
    if settings.max_refinements < 0:
        raise ValueError("KLYSTRON_MAX_REFINEMENTS must be non-negative")
