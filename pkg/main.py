"""Klystron simulator command-line entry point."""

from __future__ import annotations

import argparse
import json

from infra.config import load_dotenv, load_settings
from infra.logging import get_logger
from runner.commands import COMMANDS
from runner.run import EXIT_CONFIG, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulate quantum systems driven by a modulated electron beam."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS.values():
        sub = subparsers.add_parser(command.name, help=command.help)
        sub.add_argument("--config", required=True, help="scenario TOML file")
        sub.add_argument("--seed", type=int, default=None, help="override scenario.seed")
        sub.add_argument("--out", default=None, help="output directory")
        sub.add_argument("--workers", type=int, default=None, help="worker threads")
        sub.add_argument(
            "--full", action="store_true", help="run at full scale instead of desk caps"
        )
        sub.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="replace one config value; repeatable",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        load_dotenv()
        settings = load_settings()
    except ValueError as exc:
        print(json.dumps({"exit_status": EXIT_CONFIG, "error": str(exc)}))
        return EXIT_CONFIG

    get_logger(primary_path=settings.log_path)
    workers = args.workers if args.workers is not None else settings.workers
    if workers <= 0:
        print(json.dumps({"exit_status": EXIT_CONFIG, "error": "--workers must be positive"}))
        return EXIT_CONFIG
    outcome = run(
        args.command,
        args.config,
        args.override,
        seed=args.seed,
        out_dir=args.out or settings.out_dir,
        workers=workers,
        full=args.full or settings.full_scale,
        max_refinements=settings.max_refinements,
    )
    print(
        json.dumps(
            {
                "exit_status": outcome.exit_status,
                "out_dir": str(outcome.out_dir),
                "artifacts": outcome.artifacts,
                "error": outcome.error,
            }
        )
    )
    return outcome.exit_status


if __name__ == "__main__":
    raise SystemExit(main())
