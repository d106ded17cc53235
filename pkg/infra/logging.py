"""JSON-lines logging for simulator runs."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from infra.time_utils import utc_timestamp

FALLBACK_LOG_PATH = "/tmp/klystron.log"
# record attributes copied into every payload when a caller sets them
RUN_TAGS = ("scenario", "run_id")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


class JsonFormatter(logging.Formatter):
    """One JSON object per record; numpy values in metadata stay numeric."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": utc_timestamp(),
            "level": record.levelname,
            "module": record.name,
            "event_type": getattr(record, "event_type", "log"),
        }
        for tag in RUN_TAGS:
            payload[tag] = getattr(record, tag, None)
        payload["message"] = record.getMessage()
        payload["metadata"] = getattr(record, "metadata", {})
        return json.dumps(payload, ensure_ascii=False, default=_json_default)


def _file_handler(primary_path: str) -> logging.FileHandler:
    try:
        Path(primary_path).parent.mkdir(parents=True, exist_ok=True)
        return logging.FileHandler(primary_path)
    except OSError:
        print(f"[klystron] cannot open {primary_path}; logging to {FALLBACK_LOG_PATH}")
        return logging.FileHandler(FALLBACK_LOG_PATH)


def get_logger(name: str = "klystron", primary_path: str = "klystron.log") -> logging.Logger:
    """Logger writing JSON lines to primary_path; later calls reuse the first handler."""
    logger = logging.getLogger(name)
    logger.setLevel(logging.INFO)
    if not logger.handlers:
        handler = _file_handler(primary_path)
        handler.setFormatter(JsonFormatter())
        logger.addHandler(handler)
    return logger
