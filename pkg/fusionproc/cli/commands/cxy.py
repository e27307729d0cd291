from __future__ import annotations

import argparse
from typing import Any

from fusionproc.cli import EXIT_INPUT, EXIT_OK, CommandError, emit, input_errors
from fusionproc.core.config import get_settings
from fusionproc.schemas import CxyConfig, parse_increment_sequence, read_increment_file
from fusionproc.services.records import build_meta
from fusionproc.services.rich_get_richer import (
    check_cxy_lemma,
    check_key_lemma,
    check_martingale,
    chernoff_tail_estimate,
    run_cxy,
)

CHECKS = ("none", "martingale", "key", "cxy", "chernoff")


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "cxy",
        help="Simulate the (C, x, y) rich-get-richer process",
        description="C is given inline ('5x1000' is 1000 copies of 5, or '1,2,3') or as a file.",
    )
    increments = parser.add_mutually_exclusive_group(required=True)
    increments.add_argument("--C", dest="inline", help="Inline increment sequence")
    increments.add_argument("--C-file", dest="path", help="File with one increment per line")
    parser.add_argument("--x", type=int, required=True)
    parser.add_argument("--y", type=int, required=True)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--check", choices=CHECKS, default="none")
    parser.add_argument("--w", type=float, default=2.0, help="Deviation parameter for --check key")
    parser.add_argument("--runs", type=int, default=10_000, help="Monte Carlo runs for checks")
    parser.add_argument("--p", type=float, default=0.5, help="Bernoulli parameter for --check chernoff")
    parser.add_argument("--t-grid", default="", help="Comma-separated deviations for --check chernoff")
    parser.set_defaults(handler=handle)


def _trajectory_summary(cfg: CxyConfig) -> dict[str, Any]:
    trajectory = run_cxy(cfg)
    return {
        "r": cfg.r,
        "c": cfg.c,
        "t_r": trajectory.t[-1],
        "X": trajectory.X[-1],
        "Y": trajectory.Y[-1],
        "final_ratio": trajectory.final_ratio,
        "initial_ratio": cfg.x / (cfg.x + cfg.y),
        "accounting_holds": all(x + y == t for x, y, t in zip(trajectory.X, trajectory.Y, trajectory.t)),
    }


def handle(args: argparse.Namespace) -> int:
    seed = get_settings().default_seed if args.seed is None else args.seed
    with input_errors():
        increments = parse_increment_sequence(args.inline) if args.inline is not None else read_increment_file(args.path)
        cfg = CxyConfig(C=increments, x=args.x, y=args.y, seed=seed)
        record: dict[str, Any] = {
            "command": "cxy",
            "meta": build_meta(
                seed=seed,
                x=cfg.x,
                y=cfg.y,
                C=args.inline if args.inline is not None else args.path,
                check=args.check,
                runs=args.runs,
            ),
            "trajectory": _trajectory_summary(cfg),
        }
        if args.check == "martingale":
            record["martingale"] = check_martingale(cfg, args.runs).as_dict()
        elif args.check == "key":
            record["key"] = check_key_lemma(cfg, args.w, args.runs).as_dict()
        elif args.check == "cxy":
            record["cxy"] = check_cxy_lemma(cfg, args.runs).as_dict()
        elif args.check == "chernoff":
            try:
                grid = [float(item) for item in args.t_grid.split(",") if item.strip()]
            except ValueError as exc:
                raise CommandError(EXIT_INPUT, f"--t-grid expects numbers, got {args.t_grid!r}") from exc
            if not grid:
                raise CommandError(EXIT_INPUT, "--check chernoff needs --t-grid")
            record["chernoff"] = [
                estimate.as_dict() for estimate in chernoff_tail_estimate(cfg.C, args.p, grid, args.runs, seed)
            ]
    emit(record)
    return EXIT_OK
