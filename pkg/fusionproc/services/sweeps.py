"""(n, k) sweeps over seeded k-process runs and phase-transition estimation."""

from __future__ import annotations

import logging
import math
import re
import time
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import GENERATOR_NAME, StreamMode, pair_count
from fusionproc.core.events import LARGEST_COMPONENT_SPECIAL, largest_component_special
from fusionproc.core.milestones import compute_milestones
from fusionproc.models import StopRule
from fusionproc.schemas import ProcessConfig, SweepSpec
from fusionproc.services.process_engine import run_kprocess
from fusionproc.services.stats import aggregate, summarize

logger = logging.getLogger(__name__)

ROW_COLUMNS = (
    "n",
    "k",
    "seed",
    "M",
    "M_hat",
    "collisions",
    "M_over_pairs",
    "L1",
    "L1_over_n",
    "Lhat2_sum",
    "chi_at_m3",
    "m2_step",
    "special_total_at_m3",
    "l1_at_m2",
    "runtime_ms",
    "omega",
    "special_placement",
    "stream_mode",
    "stream_batch_size",
    "generator",
)
AGGREGATE_METRICS = (
    "L1_over_n",
    "M_over_pairs",
    "M_hat",
    "Lhat2_sum",
    "chi_at_m3",
    "m2_step",
    "special_total_at_m3",
    "l1_at_m2",
)
AGGREGATE_STATS = ("mean", "stderr", "median", "p01", "p99", "count")
AGGREGATE_COLUMNS = ("n", "k", "runs", "regime", "m1", "m2_bound", "m3") + tuple(
    f"{metric}_{stat}" for metric in AGGREGATE_METRICS for stat in AGGREGATE_STATS
)

PHASE_LEVEL = 0.5

_K_EXPRESSION = re.compile(
    r"^\s*(?:(?P<alpha>\d+(?:\.\d+)?)\s*\*?\s*)?n\s*(?:\^\s*(?P<num>\d+(?:\.\d+)?)(?:\s*/\s*(?P<den>\d+(?:\.\d+)?))?)?\s*$"
)


class SweepError(ValueError):
    """Raised for unparseable k expressions or empty grids."""


def parse_k_expression(text: str, n: int) -> int:
    """Resolve ``"100"``, ``"1*n^0.33"``, ``"2n^1/3"`` or ``"n"`` to a k in [1, n]."""

    token = text.strip().lower()
    if token.isdigit():
        value = int(token)
    else:
        match = _K_EXPRESSION.match(token)
        if match is None:
            raise SweepError(f"cannot parse k expression {text!r}")
        alpha = float(match.group("alpha") or 1.0)
        beta = 1.0
        if match.group("num") is not None:
            beta = float(match.group("num"))
            if match.group("den") is not None:
                beta /= float(match.group("den"))
        value = int(round(alpha * n**beta))
    return min(max(value, 1), n)


@dataclass(frozen=True)
class SweepTask:
    n: int
    k: int
    seed: int
    omega: str = "loglog"
    special_placement: str = "prefix"
    stream_mode: StreamMode = StreamMode.LAZY
    batch_size: Optional[int] = None

    @property
    def key(self) -> tuple[int, int, int]:
        return self.n, self.k, self.seed


@dataclass
class SweepResult:
    rows: list[dict[str, Any]]
    aggregates: list[dict[str, Any]] = field(default_factory=list)
    interrupted: bool = False


def build_tasks(spec: SweepSpec) -> list[SweepTask]:
    """One task per (n, k, repetition); seed = base_seed + global run index."""

    tasks: list[SweepTask] = []
    point = 0
    for n in spec.n_values:
        for expression in spec.k_values:
            k = parse_k_expression(expression, n)
            for repetition in range(spec.repetitions):
                tasks.append(
                    SweepTask(
                        n=n,
                        k=k,
                        seed=spec.base_seed + point * spec.repetitions + repetition,
                        omega=spec.omega,
                        special_placement=spec.special_placement,
                        stream_mode=spec.stream_mode,
                        batch_size=spec.batch_size,
                    )
                )
            point += 1
    if not tasks:
        raise SweepError("the sweep grid is empty")
    return tasks


def run_sweep_task(task: SweepTask) -> dict[str, Any]:
    started = time.perf_counter()
    milestones = compute_milestones(task.n, task.k, task.omega)
    cfg = ProcessConfig(
        n=task.n,
        k=task.k,
        seed=task.seed,
        snapshot_steps=[milestones.m3],
        stop=StopRule.AT_K_COMPONENTS,
        special_placement=task.special_placement,
        stream_mode=task.stream_mode,
        batch_size=task.batch_size,
        events=(largest_component_special(after_step=milestones.m1),),
    )
    report = run_kprocess(cfg)
    final = report.final_stats
    at_m3 = report.snapshots.get(milestones.m3)
    m2_step = None
    l1_at_m2 = None
    for record in report.events:
        if record.name == LARGEST_COMPONENT_SPECIAL:
            m2_step = record.step
            l1_at_m2 = record.value
    pairs = pair_count(task.n)
    return {
        "n": task.n,
        "k": task.k,
        "seed": task.seed,
        "M": report.M,
        "M_hat": report.M_hat,
        "collisions": report.collisions,
        "M_over_pairs": report.M / pairs if pairs else 0.0,
        "L1": final.L(1),
        "L1_over_n": final.L(1) / task.n,
        "Lhat2_sum": final.lhat_tail_sum(2),
        "chi_at_m3": at_m3.chi if at_m3 is not None else None,
        "m2_step": m2_step,
        "special_total_at_m3": at_m3.special_total if at_m3 is not None else None,
        "l1_at_m2": l1_at_m2,
        "runtime_ms": round((time.perf_counter() - started) * 1000.0, 3),
        "omega": task.omega,
        "special_placement": task.special_placement,
        "stream_mode": StreamMode(task.stream_mode).value,
        "stream_batch_size": task.batch_size or get_settings().stream_batch_size,
        "generator": GENERATOR_NAME,
    }


def _sort_rows(rows: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    return sorted(rows, key=lambda row: (row["n"], row["k"], row["seed"]))


def execute_tasks(tasks: Sequence[SweepTask], workers: Optional[int] = None) -> tuple[list[dict[str, Any]], bool]:
    """Run every task; returns the rows sorted by (n, k, seed) and an interrupted flag."""

    workers = workers or get_settings().workers
    rows: list[dict[str, Any]] = []
    total = len(tasks)
    try:
        if workers <= 1:
            for index, task in enumerate(tasks, start=1):
                rows.append(run_sweep_task(task))
                logger.info("Sweep progress %s/%s (n=%s k=%s)", index, total, task.n, task.k)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(run_sweep_task, task): task for task in tasks}
                try:
                    pending = set(futures)
                    while pending:
                        done, pending = wait(pending, return_when=FIRST_EXCEPTION)
                        for future in done:
                            task = futures[future]
                            try:
                                rows.append(future.result())
                            except Exception:
                                logger.error("Sweep task n=%s k=%s seed=%s failed", *task.key)
                                for other in pending:
                                    other.cancel()
                                raise
                        logger.info("Sweep progress %s/%s", len(rows), total)
                except KeyboardInterrupt:
                    pool.shutdown(wait=False, cancel_futures=True)
                    raise
    except KeyboardInterrupt:
        logger.warning("Sweep interrupted after %s of %s runs", len(rows), total)
        return _sort_rows(rows), True
    return _sort_rows(rows), False


def aggregate_rows(rows: Sequence[dict[str, Any]], omega: str = "loglog") -> list[dict[str, Any]]:
    groups: dict[tuple[int, int], list[dict[str, Any]]] = {}
    for row in rows:
        groups.setdefault((row["n"], row["k"]), []).append(row)
    result = []
    for (n, k), group in sorted(groups.items()):
        milestones = compute_milestones(n, k, omega)
        summary = aggregate(group, {metric: metric for metric in AGGREGATE_METRICS}, [row["seed"] for row in group])
        entry: dict[str, Any] = {
            "n": n,
            "k": k,
            "runs": summary.runs,
            "regime": milestones.regime,
            "m1": milestones.m1,
            "m2_bound": milestones.m2_bound,
            "m3": milestones.m3,
        }
        for metric in AGGREGATE_METRICS:
            for stat, value in summary[metric].as_dict().items():
                entry[f"{metric}_{stat}"] = value
        result.append(entry)
    return result


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepResult:
    tasks = build_tasks(spec)
    logger.info("Starting sweep of %s runs over n=%s k=%s", len(tasks), spec.n_values, spec.k_values)
    rows, interrupted = execute_tasks(tasks, workers)
    aggregates = aggregate_rows(rows, spec.omega) if rows else []
    return SweepResult(rows=rows, aggregates=aggregates, interrupted=interrupted)


@dataclass
class PhaseEstimate:
    """Where the mean of L1/n first drops below one half along a k grid."""

    n: int
    crossed: bool
    k_star: Optional[float] = None
    k_star_over_cube_root: Optional[float] = None
    bracket: Optional[tuple[int, int]] = None
    k_star_low: Optional[float] = None
    k_star_high: Optional[float] = None
    means: dict[int, float] = field(default_factory=dict)
    stderrs: dict[int, float] = field(default_factory=dict)
    runs: int = 0
    batches: list["PhaseEstimate"] = field(default_factory=list)

    def overlaps(self, other: "PhaseEstimate") -> bool:
        if not (self.crossed and other.crossed):
            return False
        return self.k_star_low <= other.k_star_high and other.k_star_low <= self.k_star_high  # type: ignore[operator]

    def as_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "crossed": self.crossed,
            "k_star": self.k_star,
            "k_star_over_cube_root": self.k_star_over_cube_root,
            "bracket": list(self.bracket) if self.bracket else None,
            "k_star_low": self.k_star_low,
            "k_star_high": self.k_star_high,
            "means": {str(k): value for k, value in sorted(self.means.items())},
            "stderrs": {str(k): value for k, value in sorted(self.stderrs.items())},
            "runs": self.runs,
            "batches": [batch.as_dict() for batch in self.batches],
        }


def _interpolate(k_a: int, k_b: int, mean_a: float, mean_b: float) -> float:
    if mean_a == mean_b:
        fraction = 0.5
    else:
        fraction = (mean_a - PHASE_LEVEL) / (mean_a - mean_b)
    fraction = min(max(fraction, 0.0), 1.0)
    log_k = math.log(k_a) + fraction * (math.log(k_b) - math.log(k_a))
    return math.exp(log_k)


def estimate_crossing(n: int, rows: Sequence[dict[str, Any]]) -> PhaseEstimate:
    """Log-linear interpolation of k* between the grid points bracketing 1/2."""

    by_k: dict[int, list[float]] = {}
    for row in rows:
        by_k.setdefault(row["k"], []).append(row["L1_over_n"])
    grid = sorted(by_k)
    summaries = {k: summarize(values) for k, values in by_k.items()}
    means = {k: summaries[k].mean for k in grid}
    stderrs = {k: summaries[k].stderr for k in grid}
    estimate = PhaseEstimate(n=n, crossed=False, means=means, stderrs=stderrs, runs=len(rows))
    for k_a, k_b in zip(grid, grid[1:]):
        mean_a, mean_b = means[k_a], means[k_b]
        if mean_a >= PHASE_LEVEL > mean_b:
            k_star = _interpolate(k_a, k_b, mean_a, mean_b)
            low = _interpolate(k_a, k_b, mean_a - stderrs[k_a], mean_b - stderrs[k_b])
            high = _interpolate(k_a, k_b, mean_a + stderrs[k_a], mean_b + stderrs[k_b])
            estimate.crossed = True
            estimate.k_star = k_star
            estimate.k_star_over_cube_root = k_star / n ** (1 / 3)
            estimate.bracket = (k_a, k_b)
            estimate.k_star_low = min(low, high, k_star)
            estimate.k_star_high = max(low, high, k_star)
            break
    if not estimate.crossed:
        logger.warning("No crossing of L1/n = %s on the k grid %s for n=%s", PHASE_LEVEL, grid, n)
    return estimate


def phase_estimate(
    n: int,
    k_grid: Sequence[str],
    repetitions: int,
    base_seed: int,
    *,
    batches: int = 1,
    workers: Optional[int] = None,
    omega: str = "loglog",
    stream_mode: StreamMode = StreamMode.LAZY,
    special_placement: str = "prefix",
    batch_size: Optional[int] = None,
) -> tuple[PhaseEstimate, bool]:
    """Estimate k* for one n; with ``batches > 1`` also per disjoint seed batch."""

    if batches < 1 or batches > repetitions:
        raise SweepError(f"batches must lie in [1, {repetitions}], got {batches}")
    spec = SweepSpec(
        n_values=[n],
        k_values=list(k_grid),
        repetitions=repetitions,
        base_seed=base_seed,
        omega=omega,
        stream_mode=stream_mode,
        special_placement=special_placement,
        batch_size=batch_size,
    )
    tasks = build_tasks(spec)
    rows, interrupted = execute_tasks(tasks, workers)
    combined = estimate_crossing(n, rows)
    if batches > 1:
        index_of = {task.key: position % repetitions for position, task in enumerate(tasks)}
        for batch in range(batches):
            selected = [
                row
                for row in rows
                if index_of[(row["n"], row["k"], row["seed"])] * batches // repetitions == batch
            ]
            combined.batches.append(estimate_crossing(n, selected))
    return combined, interrupted
