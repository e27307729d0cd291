from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from fusionproc.cli import EXIT_INTERRUPTED, EXIT_OK, CommandError, input_errors, parse_int_list
from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import StreamMode
from fusionproc.schemas import SweepSpec
from fusionproc.services.records import write_csv, write_csv_file
from fusionproc.services.sweeps import AGGREGATE_COLUMNS, ROW_COLUMNS, run_sweep

logger = logging.getLogger(__name__)


def add_sweep_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--repetitions", "-R", type=int, default=1, help="Runs per grid point")
    parser.add_argument("--base-seed", type=int, help="Seed of run 0; run i uses base seed + i")
    parser.add_argument("--omega", default="loglog", help="omega(n): loglog, log or const:<c>")
    parser.add_argument(
        "--stream-mode",
        choices=[mode.value for mode in StreamMode],
        default=StreamMode.LAZY.value,
    )
    parser.add_argument("--placement", choices=["prefix", "random"], default="prefix")
    parser.add_argument("--batch-size", type=int, help="Lazy stream refill size")
    parser.add_argument("--workers", type=int, help="Worker processes (default FUSIONPROC_WORKERS)")


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "sweep",
        help="Run the k-process over an (n, k) grid and write CSV rows",
        description="k values may be integers or expressions such as 1*n^0.33 or 2n^1/3.",
    )
    parser.add_argument("--n", required=True, help="Comma-separated vertex counts")
    parser.add_argument("--k", required=True, help="Comma-separated k values or expressions")
    add_sweep_arguments(parser)
    parser.add_argument("--rows", help="Per-run CSV path (default stdout)")
    parser.add_argument(
        "--aggregate",
        help="Per-(n, k) CSV path (default <FUSIONPROC_OUTPUT_DIR>/sweep_aggregate.csv)",
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    settings = get_settings()
    with input_errors():
        spec = SweepSpec(
            n_values=parse_int_list(args.n, "--n"),
            k_values=[item.strip() for item in args.k.split(",") if item.strip()],
            repetitions=args.repetitions,
            base_seed=settings.default_seed if args.base_seed is None else args.base_seed,
            omega=args.omega,
            stream_mode=StreamMode(args.stream_mode),
            special_placement=args.placement,
            batch_size=args.batch_size,
            rows_path=args.rows,
            aggregate_path=args.aggregate or str(Path(settings.output_dir) / "sweep_aggregate.csv"),
        )
        result = run_sweep(spec, workers=args.workers)

    if spec.rows_path:
        write_csv_file(spec.rows_path, result.rows, ROW_COLUMNS)
    else:
        write_csv(result.rows, ROW_COLUMNS, sys.stdout)
    if spec.aggregate_path:
        write_csv_file(spec.aggregate_path, result.aggregates, AGGREGATE_COLUMNS)
    logger.info("Sweep wrote %s rows and %s aggregate rows", len(result.rows), len(result.aggregates))
    if result.interrupted:
        raise CommandError(EXIT_INTERRUPTED, f"sweep interrupted; {len(result.rows)} completed rows written")
    return EXIT_OK
