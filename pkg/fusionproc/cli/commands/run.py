from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Optional

from fusionproc.cli import EXIT_INPUT, EXIT_OK, CommandError, emit, input_errors
from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import StreamMode
from fusionproc.core.events import largest_component_special
from fusionproc.core.milestones import Milestones, compute_milestones
from fusionproc.models import StopRule
from fusionproc.schemas import ProcessConfig
from fusionproc.services.process_engine import run_cdf, run_gnm, run_gnp, run_kprocess
from fusionproc.services.records import build_meta

logger = logging.getLogger(__name__)

MODES = {
    "at-k": StopRule.AT_K_COMPONENTS,
    "at-step": StopRule.AT_STEP,
    "exhaustive": StopRule.EXHAUSTIVE,
}


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "run",
        help="Execute one process run and print a JSONL record",
        description=(
            "Run the k-process (--k), the forbidden-set process (--family), "
            "G(n, m) (--m) or G(n, p) (--p) on one seeded pair stream."
        ),
    )
    parser.add_argument("--n", type=int, required=True, help="Vertex count")
    parser.add_argument("--k", type=int, help="Number of special vertices")
    parser.add_argument("--family", help="File with one forbidden vertex set per line")
    parser.add_argument("--m", type=int, help="Run G(n, m) with this many pairs")
    parser.add_argument("--p", type=float, help="Run G(n, p) with this edge probability")
    parser.add_argument("--seed", type=int, help="Run seed (default from FUSIONPROC_DEFAULT_SEED)")
    parser.add_argument("--mode", choices=sorted(MODES), help="Stop rule (default at-k, exhaustive for --family)")
    parser.add_argument("--stop-step", type=int, help="Step for --mode at-step")
    parser.add_argument(
        "--snapshots",
        default="",
        help="Comma-separated snapshot steps; m1, m2 and m3 resolve to milestone steps",
    )
    parser.add_argument("--omega", default="loglog", help="omega(n): loglog, log or const:<c>")
    parser.add_argument(
        "--stream-mode",
        choices=[mode.value for mode in StreamMode],
        default=StreamMode.LAZY.value,
    )
    parser.add_argument("--placement", choices=["prefix", "random"], default="prefix")
    parser.add_argument("--batch-size", type=int, help="Lazy stream refill size")
    parser.add_argument("--trace", action="store_true", help="Include the per-pair trace")
    parser.set_defaults(handler=handle)


def read_family_file(path: str) -> list[list[int]]:
    family: list[list[int]] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.replace(",", " ").split()
        if not tokens or tokens[0].startswith("#"):
            continue
        try:
            family.append([int(token) for token in tokens])
        except ValueError as exc:
            raise ValueError(f"{path}: line {line_number}: expected vertex indices, got {line.strip()!r}") from exc
    return family


def _snapshot_steps(text: str, milestones: Optional[Milestones]) -> list[int]:
    steps: set[int] = set()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if milestones is not None:
            steps.add(milestones.resolve(token))
        elif token.isdigit():
            steps.add(int(token))
        else:
            raise CommandError(EXIT_INPUT, f"snapshot {token!r} needs --k to resolve milestones")
    return sorted(steps)


def handle(args: argparse.Namespace) -> int:
    settings = get_settings()
    seed = settings.default_seed if args.seed is None else args.seed
    stream_mode = StreamMode(args.stream_mode)
    with input_errors():
        milestones = None
        if args.k is not None and args.n >= 2 and 1 <= args.k <= args.n:
            milestones = compute_milestones(args.n, args.k, args.omega)
        snapshots = _snapshot_steps(args.snapshots, milestones)
        family = read_family_file(args.family) if args.family else None

        if args.m is not None or args.p is not None:
            process = "gnm" if args.m is not None else "gnp"
            if args.m is not None:
                report = run_gnm(args.n, args.m, seed, snapshots, stream_mode=stream_mode, batch_size=args.batch_size)
            else:
                report = run_gnp(args.n, args.p, seed, snapshots, stream_mode=stream_mode, batch_size=args.batch_size)
            stop = StopRule.AT_STEP
        else:
            process = "cdf" if family is not None else "kprocess"
            default_mode = "exhaustive" if family is not None else "at-k"
            stop = MODES[args.mode or default_mode]
            events = ()
            if milestones is not None and family is None:
                events = (largest_component_special(after_step=milestones.m1),)
            cfg = ProcessConfig(
                n=args.n,
                k=args.k,
                family=family,
                seed=seed,
                snapshot_steps=snapshots,
                stop=stop,
                stop_step=args.stop_step,
                record_trace=args.trace,
                special_placement=args.placement,
                stream_mode=stream_mode,
                batch_size=args.batch_size,
                events=events,
            )
            report = run_cdf(cfg) if family is not None else run_kprocess(cfg)

    logger.info("Run %s n=%s seed=%s finished after %s simulated steps", process, args.n, seed, report.steps_simulated)
    record: dict[str, Any] = {
        "command": "run",
        "meta": build_meta(
            seed=seed,
            stream_mode=stream_mode,
            batch_size=args.batch_size,
            process=process,
            n=args.n,
            k=args.k,
            m=args.m,
            p=args.p,
            family=family,
            stop=stop,
            stop_step=args.stop_step,
            snapshot_steps=snapshots,
            omega=args.omega,
            special_placement=args.placement,
        ),
        "milestones": milestones.as_dict() if milestones is not None else None,
        "report": report.as_dict(),
    }
    if args.trace and report.trace is not None:
        record["trace"] = [list(entry) for entry in report.trace]
    emit(record)
    return EXIT_OK
