from __future__ import annotations

import argparse
from typing import Any

from fusionproc.cli import EXIT_OK, EXIT_RUNTIME, emit
from fusionproc.services.selftest import SELFTEST_CHECKS, run_selftest


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "selftest",
        help="Run the built-in deterministic checks",
    )
    parser.add_argument("--only", action="append", choices=sorted(SELFTEST_CHECKS), help="Run only this check")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    results = run_selftest(args.only)
    for result in results:
        emit({"command": "selftest", **result.as_dict()})
    return EXIT_OK if all(result.passed for result in results) else EXIT_RUNTIME
