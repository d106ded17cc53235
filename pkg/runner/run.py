"""Run one subcommand for a scenario and persist its tables and metadata."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from infra.errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    OvertakingError,
    ValidityError,
)
from infra.time_utils import Stopwatch
from runner.commands import COMMANDS, CommandResult, RunContext
from runner.outputs import package_versions, stable_hash, write_csv, write_meta
from runner.scenario import load_config
from runner.validity import ValidityReport, validity_report

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_VALIDITY = 3
EXIT_CONVERGENCE = 4
SEED_LIMIT = 2**64


@dataclass(frozen=True)
class RunOutcome:
    exit_status: int
    out_dir: Path
    artifacts: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    error: str = ""


def exit_code_for(exc: Exception) -> int:
    """CLI exit status of an error; errors outside the simulator hierarchy map to 1."""
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_CONFIG
    if isinstance(exc, (ValidityError, OvertakingError)):
        return EXIT_VALIDITY
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    return EXIT_INTERNAL


def _failure_details(exc: Exception) -> dict[str, Any]:
    details: dict[str, Any] = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        details["key_path"] = exc.key_path
    if isinstance(exc, ValidityError):
        details["condition"] = exc.condition
    if isinstance(exc, ConvergenceError):
        details["error_estimate"] = exc.error_estimate
        details["last_time"] = exc.last_time
        to_record = getattr(exc.partial, "to_record", None)
        if callable(to_record):
            details["partial"] = to_record()
    return details


def run(
    command: str,
    config_path: str | Path,
    overrides: list[str] | None = None,
    *,
    seed: int | None = None,
    out_dir: str | Path = "out",
    workers: int = 1,
    full: bool = False,
    max_refinements: int = 3,
) -> RunOutcome:
    """Load, validate and run one scenario; the exit status follows the error kind.

    Tables and meta.json go to out_dir/<scenario id>/<command>. A config that
    cannot be loaded writes its meta.json directly into out_dir.
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    if workers <= 0:
        raise ValueError("workers must be positive")
    logger = logging.getLogger("klystron")
    stopwatch = Stopwatch()
    base = Path(out_dir)
    meta: dict[str, Any] = {
        "command": command,
        "config_path": str(config_path),
        "overrides": list(overrides or []),
        "started_at": stopwatch.started_at,
        "versions": package_versions(),
        "workers": workers,
        "full_scale": full,
    }

    try:
        config = load_config(config_path, overrides)
        run_seed = config.seed if seed is None else seed
        if not 0 <= run_seed < SEED_LIMIT:
            raise ConfigError("seed must be a 64-bit unsigned integer", key_path="scenario.seed")
    except ConfigError as exc:
        logger.error(
            "scenario config rejected",
            extra={"event_type": "run_failed", "metadata": _failure_details(exc)},
        )
        meta.update(
            exit_status=EXIT_CONFIG,
            error=_failure_details(exc),
            wall_time_s=stopwatch.elapsed(),
        )
        write_meta(base, meta)
        return RunOutcome(EXIT_CONFIG, base, error=str(exc))

    digest = stable_hash(config.tree)
    target = base / config.scenario_id / command
    tags = {"scenario": config.scenario_id, "run_id": f"{digest[:12]}-{run_seed}"}
    meta.update(scenario=config.scenario_id, config=config.tree, config_digest=digest)
    meta["seed"] = run_seed
    logger.info(
        "run started",
        extra={
            **tags,
            "event_type": "run_start",
            "metadata": {"command": command, "seed": run_seed, "workers": workers},
        },
    )

    report = ValidityReport()
    result = CommandResult()
    status = EXIT_OK
    error = ""
    try:
        report = validity_report(config)
        _log_validity(logger, tags, report)
        report.enforce(COMMANDS[command].requires)
        context = RunContext(
            config=config,
            seed=run_seed,
            workers=workers,
            full=full,
            max_refinements=max_refinements,
            config_digest=digest,
        )
        result = COMMANDS[command].run(context)
    except Exception as exc:
        status = exit_code_for(exc)
        error = str(exc)
        meta["error"] = _failure_details(exc)
        logger.error(
            "run failed",
            exc_info=status == EXIT_INTERNAL,
            extra={**tags, "event_type": "run_failed", "metadata": meta["error"]},
        )

    artifacts = []
    for table in result.tables:
        path = write_csv(target, table)
        artifacts.append(path.name)
        logger.info(
            "artifact written",
            extra={
                **tags,
                "event_type": "artifact_written",
                "metadata": {"path": str(path), "rows": int(table.data.shape[0])},
            },
        )
    meta.update(
        validity=report.to_records(),
        summary=result.summary,
        artifacts=artifacts,
        exit_status=status,
        wall_time_s=stopwatch.elapsed(),
    )
    write_meta(target, meta)
    if status == EXIT_OK:
        logger.info(
            "run complete",
            extra={
                **tags,
                "event_type": "run_complete",
                "metadata": {"artifacts": artifacts, "wall_time_s": meta["wall_time_s"]},
            },
        )
    return RunOutcome(status, target, artifacts, result.summary, error)


def _log_validity(logger: logging.Logger, tags: dict[str, str], report: ValidityReport) -> None:
    for entry in report.entries:
        level = logging.INFO if entry.status.value == "pass" else logging.WARNING
        logger.log(
            level,
            f"validity {entry.name}: {entry.status.value}",
            extra={**tags, "event_type": "validity", "metadata": entry.to_record()},
        )
