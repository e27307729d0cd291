from __future__ import annotations

import argparse
from typing import Any

from fusionproc.cli import EXIT_INTERRUPTED, EXIT_OK, CommandError, emit, input_errors
from fusionproc.cli.commands.sweep import add_sweep_arguments
from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import StreamMode
from fusionproc.services.records import build_meta
from fusionproc.services.sweeps import phase_estimate


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "phase-estimate",
        help="Estimate the k at which mean L1/n crosses 1/2",
        description="Log-linear interpolation between the grid points bracketing the crossing.",
    )
    parser.add_argument("--n", type=int, required=True, help="Vertex count")
    parser.add_argument("--k", required=True, help="Comma-separated k grid (integers or expressions)")
    add_sweep_arguments(parser)
    parser.add_argument("--batches", type=int, default=1, help="Disjoint seed batches to estimate separately")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    settings = get_settings()
    base_seed = settings.default_seed if args.base_seed is None else args.base_seed
    grid = [item.strip() for item in args.k.split(",") if item.strip()]
    with input_errors():
        estimate, interrupted = phase_estimate(
            args.n,
            grid,
            args.repetitions,
            base_seed,
            batches=args.batches,
            workers=args.workers,
            omega=args.omega,
            stream_mode=StreamMode(args.stream_mode),
            special_placement=args.placement,
            batch_size=args.batch_size,
        )
    emit(
        {
            "command": "phase-estimate",
            "meta": build_meta(
                seed=base_seed,
                stream_mode=StreamMode(args.stream_mode),
                batch_size=args.batch_size,
                n=args.n,
                k_grid=grid,
                repetitions=args.repetitions,
                batches=args.batches,
                omega=args.omega,
                special_placement=args.placement,
            ),
            "estimate": estimate.as_dict(),
        }
    )
    if interrupted:
        raise CommandError(EXIT_INTERRUPTED, "phase estimation interrupted; partial estimate written")
    return EXIT_OK
