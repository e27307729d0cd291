"""Run G(n, m), the k-process and the CDF-process over a seeded pair stream."""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Optional, Sequence

from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import (
    STREAM_GNP,
    STREAM_SPECIALS,
    EdgeStream,
    StreamMode,
    make_generator,
    pair_count,
)
from fusionproc.core.events import EventSpec
from fusionproc.core.partition import Partition, make_partition
from fusionproc.models import ComponentStats, EventRecord, MergeOutcome, ProcessReport, StopRule
from fusionproc.schemas import ProcessConfig

logger = logging.getLogger(__name__)

EDGE_COUNT_EVENT = "edge_count"

UnionRule = Callable[[int, int], MergeOutcome]
BlockRule = Callable[[Sequence[int], Sequence[int], int, int, int, bool], tuple[int, int]]


class ProcessConfigError(ValueError):
    """Raised when a config does not fit the requested process."""


class DuplicateEventError(ValueError):
    """Raised when two events with the same name are registered."""


def place_specials(n: int, k: int, seed: int, placement: str = "prefix") -> list[int]:
    """Choose the ``k`` special vertices.

    ``random`` placement takes a prefix of one seeded permutation, so the
    special sets for ``k1 <= k2`` under the same seed are nested. The
    permutation uses its own generator key and leaves the pair stream alone.
    """

    if not 0 <= k <= n:
        raise ProcessConfigError(f"k must satisfy 0 <= k <= n, got k={k} n={n}")
    if placement == "prefix":
        return list(range(k))
    if placement == "random":
        order = make_generator(seed, STREAM_SPECIALS).permutation(n)
        return [int(vertex) for vertex in order[:k]]
    raise ProcessConfigError(f"unknown special placement {placement!r}")


def register_event(cfg: ProcessConfig, spec: EventSpec) -> ProcessConfig:
    if any(existing.name == spec.name for existing in cfg.events):
        raise DuplicateEventError(f"event {spec.name!r} is already registered")
    return cfg.copy(update={"events": tuple(cfg.events) + (spec,)})


def _check_events(events: Sequence[EventSpec]) -> None:
    seen: set[str] = set()
    for spec in events:
        if spec.name in seen:
            raise DuplicateEventError(f"event {spec.name!r} is already registered")
        seen.add(spec.name)


def _fire(spec: EventSpec, step: int, partition: Partition) -> EventRecord:
    value = spec.measure(partition) if spec.measure is not None else None
    logger.debug("Event %s fired at step %s", spec.name, step)
    return EventRecord(name=spec.name, step=step, value=value)


def _absorb_each(
    partition: Partition,
    rule: UnionRule,
    us: Sequence[int],
    vs: Sequence[int],
    start: int,
    stop: int,
    target: int,
    stop_on_merge: bool,
    trace: Optional[list[tuple[int, int, int, str]]],
    step: int,
) -> tuple[int, int]:
    """Per-pair counterpart of :meth:`Partition.absorb_pairs` for any rule."""

    collisions = 0
    i = start
    while i < stop:
        u = us[i]
        v = vs[i]
        i += 1
        outcome = rule(u, v)
        if trace is not None:
            trace.append((step + i - start, u, v, outcome.value))
        if outcome is MergeOutcome.COLLISION:
            collisions += 1
        elif outcome is MergeOutcome.MERGED and (stop_on_merge or partition.num_components == target):
            break
    return i - start, collisions


def _simulate(
    partition: Partition,
    rule: UnionRule,
    *,
    absorb: Optional[BlockRule] = None,
    k: int,
    target: Optional[int],
    seed: int,
    stream_mode: StreamMode,
    batch_size: Optional[int],
    stop: StopRule,
    stop_step: Optional[int],
    snapshot_steps: Sequence[int],
    events: Sequence[EventSpec],
    record_trace: bool,
) -> ProcessReport:
    n = partition.n
    total = pair_count(n)
    _check_events(events)

    if stop == StopRule.AT_STEP:
        if stop_step is None or stop_step > total:
            raise ProcessConfigError(f"stop step {stop_step} outside [0, {total}] for n={n}")
        limit = stop_step
    elif stop == StopRule.EXHAUSTIVE:
        max_n = get_settings().exhaustive_max_n
        if n > max_n:
            raise ProcessConfigError(f"exhaustive mode supports n <= {max_n}, got n={n}")
        limit = total
    else:
        if target is None:
            raise ProcessConfigError("at_k_components needs a target component count")
        limit = total

    stream = EdgeStream(n, seed, stream_mode, batch_size) if total else None
    snapshots: dict[int, ComponentStats] = {}
    pending_snapshots = [step for step in snapshot_steps if step <= total]
    snap_pos = 0
    pending = list(enumerate(events))
    fired: list[EventRecord] = []
    trace: Optional[list[tuple[int, int, int, str]]] = [] if record_trace else None

    def observe(step: int) -> None:
        nonlocal snap_pos, pending
        if snap_pos < len(pending_snapshots) and pending_snapshots[snap_pos] == step:
            snapshots[step] = ComponentStats.from_partition(partition)
            snap_pos += 1
        if pending:
            remaining = []
            for index, spec in pending:
                if step >= spec.first_step and spec.predicate(step, partition):
                    fired.append(_fire(spec, step, partition))
                else:
                    remaining.append((index, spec))
            pending = remaining

    accepted = 0
    collisions = 0
    step = 0
    m_hat: Optional[int] = 0 if target is not None and partition.num_components == target else None
    observe(0)
    early = stop == StopRule.AT_K_COMPONENTS

    # Blocks end at every step that must be observed: snapshot steps, the
    # first step of a pending event, the step reaching the target, and every
    # merge while an event is open. Between those the partition is unobserved.
    while step < limit and not (early and m_hat is not None):
        us, vs, start, stop_at = stream.pending_block(limit - step)  # type: ignore[union-attr]
        horizon = stop_at - start
        if snap_pos < len(pending_snapshots):
            horizon = min(horizon, pending_snapshots[snap_pos] - step)
        watching = False
        if pending:
            opening = min(spec.first_step for _, spec in pending)
            if opening > step:
                horizon = min(horizon, opening - step)
            else:
                watching = True
        seek = target if target is not None and m_hat is None else -1
        if absorb is not None and trace is None:
            consumed, rejected = absorb(us, vs, start, start + horizon, seek, watching)
        else:
            consumed, rejected = _absorb_each(
                partition, rule, us, vs, start, start + horizon, seek, watching, trace, step
            )
        stream.consume(consumed)  # type: ignore[union-attr]
        step += consumed
        collisions += rejected
        accepted += consumed - rejected
        if seek >= 0 and partition.num_components == seek:
            m_hat = step
        if pending or snap_pos < len(pending_snapshots):
            observe(step)

    final_sizes = partition.component_sizes()
    steps_simulated = step
    considered = step
    if early and m_hat is not None:
        # Structure is frozen from here on: within-component pairs are
        # accepted and every other pair is a collision.
        accepted = sum(size * (size - 1) // 2 for size, _ in final_sizes)
        considered = total
        collisions = total - accepted
        frozen = ComponentStats.from_sizes(final_sizes, n)
        for later in pending_snapshots[snap_pos:]:
            snapshots[later] = frozen
        late: list[tuple[int, int, EventRecord]] = []
        for index, spec in pending:
            at = max(step + 1, spec.first_step)
            if at <= total and spec.predicate(at, partition):
                late.append((at, index, _fire(spec, at, partition)))
        fired.extend(record for _, _, record in sorted(late, key=lambda item: item[:2]))

    logger.debug(
        "Run n=%s k=%s seed=%s finished: M=%s M_hat=%s collisions=%s simulated=%s",
        n,
        k,
        seed,
        accepted,
        m_hat,
        collisions,
        steps_simulated,
    )
    return ProcessReport(
        n=n,
        k=k,
        final_sizes=final_sizes,
        M=accepted,
        M_hat=m_hat,
        collisions=collisions,
        considered=considered,
        snapshots=snapshots,
        events=fired,
        steps_simulated=steps_simulated,
        trace=trace,
    )


def run_gnm(
    n: int,
    m: int,
    seed: int,
    snapshot_steps: Sequence[int] = (),
    *,
    stream_mode: StreamMode = StreamMode.LAZY,
    batch_size: Optional[int] = None,
    events: Sequence[EventSpec] = (),
) -> ProcessReport:
    """Union the first ``m`` pairs of the stream unconditionally."""

    if n < 1:
        raise ProcessConfigError("vertex count must be at least 1")
    total = pair_count(n)
    if not 0 <= m <= total:
        raise ProcessConfigError(f"m must lie in [0, {total}] for n={n}, got {m}")
    partition = make_partition(n)
    return _simulate(
        partition,
        partition.union,
        absorb=partition.absorb_pairs,
        k=0,
        target=None,
        seed=seed,
        stream_mode=stream_mode,
        batch_size=batch_size,
        stop=StopRule.AT_STEP,
        stop_step=m,
        snapshot_steps=sorted(set(snapshot_steps)),
        events=events,
        record_trace=False,
    )


def run_gnp(
    n: int,
    p: float,
    seed: int,
    snapshot_steps: Sequence[int] = (),
    *,
    stream_mode: StreamMode = StreamMode.LAZY,
    batch_size: Optional[int] = None,
) -> ProcessReport:
    """G(n, p): a Binomial(C(n, 2), p) edge count, then G(n, m) on the same stream."""

    if not 0.0 <= p <= 1.0:
        raise ProcessConfigError(f"p must lie in [0, 1], got {p}")
    m = int(make_generator(seed, STREAM_GNP).binomial(pair_count(n), p))
    report = run_gnm(n, m, seed, snapshot_steps, stream_mode=stream_mode, batch_size=batch_size)
    report.events.insert(0, EventRecord(name=EDGE_COUNT_EVENT, step=m, value=p))
    return report


def run_kprocess(cfg: ProcessConfig) -> ProcessReport:
    if cfg.k is None:
        raise ProcessConfigError("the k-process needs k; use run_cdf for forbidden families")
    specials = place_specials(cfg.n, cfg.k, cfg.seed, cfg.special_placement)
    partition = make_partition(cfg.n, specials)
    return _simulate(
        partition,
        partition.try_union_kprocess,
        absorb=partition.absorb_pairs,
        k=cfg.k,
        target=cfg.k,
        seed=cfg.seed,
        stream_mode=cfg.stream_mode,
        batch_size=cfg.batch_size,
        stop=cfg.stop,
        stop_step=cfg.stop_step,
        snapshot_steps=cfg.snapshot_steps,
        events=cfg.events,
        record_trace=cfg.record_trace,
    )


def run_cdf(cfg: ProcessConfig) -> ProcessReport:
    """Run the forbidden-set process.

    Vertices covered by the family are marked special, and ``M_hat`` is the
    first step with as many components as covered vertices. For a family of
    all pairs over a terminal set this reproduces the k-process report.
    """

    if cfg.family is None:
        raise ProcessConfigError("run_cdf needs a forbidden family")
    if cfg.stop == StopRule.AT_K_COMPONENTS:
        raise ProcessConfigError("the CDF-process stops exhaustively or at a step, not at k components")
    covered = sorted({vertex for members in cfg.family for vertex in members})
    partition = make_partition(cfg.n, covered, cfg.family)
    return _simulate(
        partition,
        partition.try_union_cdf,
        k=len(covered),
        target=len(covered),
        seed=cfg.seed,
        stream_mode=cfg.stream_mode,
        batch_size=cfg.batch_size,
        stop=cfg.stop,
        stop_step=cfg.stop_step,
        snapshot_steps=cfg.snapshot_steps,
        events=cfg.events,
        record_trace=cfg.record_trace,
    )


def run_coupled_monotonicity(
    n: int,
    k1: int,
    k2: int,
    seed: int,
    snapshot_steps: Iterable[int] = (),
    *,
    stop: StopRule = StopRule.AT_K_COMPONENTS,
    special_placement: str = "prefix",
    stream_mode: StreamMode = StreamMode.LAZY,
    batch_size: Optional[int] = None,
    events: Sequence[EventSpec] = (),
) -> tuple[ProcessReport, ProcessReport]:
    """Run the k1- and k2-process on one pair sequence with nested special sets."""

    if not 1 <= k1 <= k2 <= n:
        raise ProcessConfigError(f"need 1 <= k1 <= k2 <= n, got k1={k1} k2={k2} n={n}")
    steps = sorted(set(snapshot_steps))
    reports = []
    for k in (k1, k2):
        cfg = ProcessConfig(
            n=n,
            k=k,
            seed=seed,
            snapshot_steps=steps,
            stop=stop,
            special_placement=special_placement,
            stream_mode=stream_mode,
            batch_size=batch_size,
            events=tuple(events),
        )
        reports.append(run_kprocess(cfg))
    return reports[0], reports[1]
