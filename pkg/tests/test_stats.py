import math

import pytest

from fusionproc.core.partition import make_partition
from fusionproc.models import StopRule
from fusionproc.schemas import ProcessConfig
from fusionproc.services.process_engine import run_kprocess
from fusionproc.services.stats import (
    StatsError,
    aggregate,
    component_stats,
    final_l1,
    from_sizes,
    order_statistics,
    snapshot_metric,
    summarize,
    susceptibility,
)


def test_susceptibility_examples():
    assert susceptibility(from_sizes([(2, 0), (1, 0), (1, 0)], 4)) == 1.5
    assert susceptibility(component_stats(make_partition(7))) == 1.0
    partition = make_partition(5)
    for v in range(1, 5):
        partition.union(0, v)
    assert susceptibility(component_stats(partition)) == 5.0


def test_susceptibility_is_at_least_largest_squared_over_n():
    stats = from_sizes([(6, 1), (3, 0), (2, 1), (1, 0)], 12)
    assert stats.chi >= stats.L(1) ** 2 / stats.n


def test_order_statistics():
    stats = from_sizes([(3, 0), (1, 1), (5, 1)], 9)
    assert stats.sizes == (5, 3, 1)
    assert stats.special_sizes == (5, 1)
    assert order_statistics(stats, 1) == (5, 5)
    assert order_statistics(stats, 2) == (3, 1)
    assert order_statistics(stats, 3) == (1, 0)
    assert order_statistics(stats, 9) == (0, 0)
    assert stats.lhat_tail_sum(2) == 1
    with pytest.raises(StatsError):
        order_statistics(stats, 0)


def test_from_sizes_checks_total():
    with pytest.raises(StatsError):
        from_sizes([(2, 0), (2, 0)], 5)


def test_summarize_single_and_constant_samples():
    single = summarize([4.0])
    assert (single.mean, single.stderr, single.median, single.count) == (4.0, 0.0, 4.0, 1)
    constant = summarize([2.0, 2.0])
    assert constant.stderr == 0.0
    assert constant.p01 == constant.p99 == 2.0


def test_summarize_nearest_rank_percentiles():
    summary = summarize(range(1, 101))
    assert summary.p01 == 1.0
    assert summary.median == 50.0
    assert summary.p99 == 99.0
    assert summary.mean == 50.5
    assert summary.stderr == pytest.approx(math.sqrt(sum((x - 50.5) ** 2 for x in range(1, 101)) / 99) / 10)


def test_summarize_drops_missing_values():
    summary = summarize([1.0, math.nan, 3.0])
    assert summary.count == 2
    assert summary.mean == 2.0
    empty = summarize([math.nan])
    assert empty.count == 0
    assert math.isnan(empty.mean)
    with pytest.raises(StatsError):
        summarize([])


def test_aggregate_reports_with_selectors():
    reports = [
        run_kprocess(ProcessConfig(n=40, k=3, seed=seed, snapshot_steps=[50], stop=StopRule.EXHAUSTIVE))
        for seed in range(5)
    ]
    result = aggregate(
        reports,
        {"L1": final_l1, "M_hat": "M_hat", "chi_50": snapshot_metric(50, "chi"), "missing": snapshot_metric(7, "L1")},
        seeds=range(5),
    )
    assert result.runs == 5
    assert result.seeds == [0, 1, 2, 3, 4]
    assert result["L1"].mean == sum(report.final_stats.L(1) for report in reports) / 5
    assert result["M_hat"].count == 5
    assert result["chi_50"].mean >= 1.0
    assert result["missing"].count == 0


def test_aggregate_mapping_rows_and_none_values():
    rows = [{"x": 1}, {"x": None}, {"x": 5}]
    result = aggregate(rows, {"x": "x"})
    assert result["x"].count == 2
    assert result["x"].mean == 3.0
    with pytest.raises(StatsError):
        aggregate([], {"x": "x"})


def test_final_special_largest_equals_largest():
    for seed in range(10):
        report = run_kprocess(ProcessConfig(n=60, k=4, seed=seed))
        stats = report.final_stats
        assert stats.L_hat(1) == stats.L(1)
        assert len(stats.special_sizes) == 4
