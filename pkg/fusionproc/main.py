from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from fusionproc import __version__
from fusionproc.cli import EXIT_INPUT, EXIT_INTERRUPTED, EXIT_RUNTIME, CommandError
from fusionproc.cli.commands import cxy as cxy_command
from fusionproc.cli.commands import greedy as greedy_command
from fusionproc.cli.commands import phase_estimate as phase_estimate_command
from fusionproc.cli.commands import run as run_command
from fusionproc.cli.commands import selftest as selftest_command
from fusionproc.cli.commands import sweep as sweep_command
from fusionproc.core.config import get_settings

logger = logging.getLogger(__name__)

COMMAND_MODULES = (
    run_command,
    sweep_command,
    phase_estimate_command,
    greedy_command,
    cxy_command,
    selftest_command,
)


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Simulate constrained random graph processes and check their statistics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Override FUSIONPROC_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except CommandError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except RuntimeError as exc:
        logger.exception("Command %s failed", args.command)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
