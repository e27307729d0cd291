"""Fast deterministic checks executed by the ``selftest`` command."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

from fusionproc.core.edge_stream import StreamExhaustedError, full_shuffle_stream, lazy_stream
from fusionproc.core.partition import make_partition
from fusionproc.models import ComponentStats, MergeOutcome, StopRule
from fusionproc.schemas import CxyConfig, ProcessConfig
from fusionproc.services.greedy_cut import (
    brute_force_multiway_cut,
    build_example_graph,
    edge_first_greedy,
    make_graph,
)
from fusionproc.services.process_engine import run_cdf, run_gnm, run_kprocess
from fusionproc.services.rich_get_richer import chernoff_bounds, run_cxy
from fusionproc.services.stats import order_statistics, susceptibility

logger = logging.getLogger(__name__)

SelftestCheck = Callable[[], None]

SELFTEST_CHECKS: dict[str, SelftestCheck] = {}


@dataclass(frozen=True)
class SelftestResult:
    name: str
    passed: bool
    detail: Optional[str] = None

    def as_dict(self) -> dict[str, object]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def check(name: str) -> Callable[[SelftestCheck], SelftestCheck]:
    def decorator(func: SelftestCheck) -> SelftestCheck:
        SELFTEST_CHECKS[name] = func
        return func

    return decorator


@check("partition.initial_state")
def _partition_initial_state() -> None:
    partition = make_partition(5, {0, 1})
    assert partition.num_components == 5
    assert partition.special_count == [1, 1, 0, 0, 0]
    assert make_partition(3).component_sizes() == [(1, 0)] * 3
    assert all(count == 1 for count in make_partition(4, range(4)).special_count)


@check("partition.kprocess_rule")
def _partition_kprocess_rule() -> None:
    partition = make_partition(5, {0, 1})
    before = partition.state()
    assert partition.try_union_kprocess(0, 1) is MergeOutcome.COLLISION
    assert partition.state() == before
    assert partition.try_union_kprocess(2, 3) is MergeOutcome.MERGED
    assert partition.try_union_kprocess(2, 3) is MergeOutcome.SAME_COMPONENT

    partition = make_partition(4, {0, 1})
    assert partition.try_union_kprocess(0, 2) is MergeOutcome.MERGED
    assert partition.try_union_kprocess(1, 3) is MergeOutcome.MERGED
    assert partition.try_union_kprocess(2, 3) is MergeOutcome.COLLISION


@check("partition.cdf_rule")
def _partition_cdf_rule() -> None:
    partition = make_partition(4, family=[[0, 1, 2]])
    assert partition.try_union_cdf(0, 1) is MergeOutcome.MERGED
    assert partition.try_union_cdf(2, 3) is MergeOutcome.MERGED
    assert partition.try_union_cdf(1, 2) is MergeOutcome.COLLISION

    partition = make_partition(4, family=[])
    for u, v in itertools.combinations(range(4), 2):
        assert partition.try_union_cdf(u, v) is not MergeOutcome.COLLISION
    assert partition.num_components == 1


@check("stream.exhaustion")
def _stream_exhaustion() -> None:
    for factory in (lazy_stream, full_shuffle_stream):
        stream = factory(3, 11)
        pairs = stream.take(3)
        assert sorted(pairs) == [(0, 1), (0, 2), (1, 2)]
        try:
            stream.next_pair()
        except StreamExhaustedError:
            pass
        else:
            raise AssertionError("a fourth pair was emitted for n=3")
        assert factory(2, 5).take(1) == [(0, 1)]


@check("stream.determinism")
def _stream_determinism() -> None:
    assert lazy_stream(100, 7).take(500) == lazy_stream(100, 7).take(500)


@check("engine.gnm")
def _engine_gnm() -> None:
    assert run_gnm(4, 6, 1).final_sizes == [(4, 0)]
    assert run_gnm(6, 0, 1).final_sizes == [(1, 0)] * 6


@check("engine.kprocess_extremes")
def _engine_kprocess_extremes() -> None:
    report = run_kprocess(ProcessConfig(n=10, k=10, seed=1))
    assert report.M == 0 and report.M_hat == 0
    report = run_kprocess(ProcessConfig(n=4, k=1, seed=1, stop=StopRule.EXHAUSTIVE))
    assert report.M == 6 and report.final_sizes == [(4, 1)]


@check("engine.early_stop_matches_exhaustive")
def _engine_early_stop() -> None:
    for seed in range(20):
        early = run_kprocess(ProcessConfig(n=12, k=3, seed=seed))
        full = run_kprocess(ProcessConfig(n=12, k=3, seed=seed, stop=StopRule.EXHAUSTIVE))
        assert early == full, f"seed {seed}"
        assert len(full.final_sizes) == 3
        assert full.M == sum(size * (size - 1) // 2 for size, _ in full.final_sizes)
        assert full.M <= math.comb(12 - 3 + 1, 2)


@check("engine.cdf_pairwise_family")
def _engine_cdf_pairwise() -> None:
    terminals = [0, 1, 2]
    family = [list(pair) for pair in itertools.combinations(terminals, 2)]
    for seed in range(5):
        cdf = run_cdf(ProcessConfig(n=9, family=family, seed=seed, stop=StopRule.EXHAUSTIVE))
        kproc = run_kprocess(ProcessConfig(n=9, k=3, seed=seed, stop=StopRule.EXHAUSTIVE))
        assert cdf == kproc, f"seed {seed}"


@check("stats.formulas")
def _stats_formulas() -> None:
    assert susceptibility(ComponentStats.from_sizes([(2, 0), (1, 0), (1, 0)], 4)) == 1.5
    stats = ComponentStats.from_sizes([(5, 1), (3, 0), (1, 1)], 9)
    assert order_statistics(stats, 2) == (3, 1)
    assert order_statistics(stats, 9) == (0, 0)


@check("greedy.example")
def _greedy_example() -> None:
    graph, terminals = build_example_graph(3, 0.5)
    assert graph.total_weight == 40.5
    result = edge_first_greedy(graph, terminals, 1)
    assert result.retained_weight == 13.5
    assert result.component_sizes() == [3, 3, 3]


@check("greedy.oracle_path")
def _greedy_oracle_path() -> None:
    graph = make_graph(3, [(0, 1, 5), (1, 2, 3)])
    optimum = brute_force_multiway_cut(graph, [0, 2])
    assert optimum.removed_weight == 3
    assert optimum.removed_edges == ((1, 2, 3.0),)


@check("cxy.formulas")
def _cxy_formulas() -> None:
    upper, lower, _ = chernoff_bounds((1,) * 100, 0.5, 10)
    assert abs(upper - math.exp(-0.9375)) < 1e-12
    assert chernoff_bounds((1,) * 100, 0.5, 0)[:2] == (1.0, 1.0)
    trajectory = run_cxy(CxyConfig(C=(), x=3, y=4, seed=1))
    assert trajectory.X == (3,) and trajectory.Y == (4,)


def run_selftest(names: Optional[list[str]] = None) -> list[SelftestResult]:
    results = []
    for name, func in SELFTEST_CHECKS.items():
        if names and name not in names:
            continue
        try:
            func()
        except AssertionError as exc:
            logger.error("Selftest %s failed: %s", name, exc)
            results.append(SelftestResult(name=name, passed=False, detail=str(exc) or "assertion failed"))
        else:
            results.append(SelftestResult(name=name, passed=True))
    return results
