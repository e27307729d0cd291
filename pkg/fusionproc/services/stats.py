"""Component order statistics and cross-run aggregation."""

from __future__ import annotations

import math
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from fusionproc.core.partition import Partition
from fusionproc.models import ComponentStats, MetricSummary, ProcessReport, RunAggregate

MetricSelector = Callable[[Any], float]


class StatsError(ValueError):
    """Raised for invalid order-statistic indices or empty aggregations."""


def component_stats(partition: Partition) -> ComponentStats:
    return ComponentStats.from_partition(partition)


def from_sizes(pairs: Sequence[tuple[int, int]], n: int) -> ComponentStats:
    total = sum(size for size, _ in pairs)
    if total != n:
        raise StatsError(f"component sizes sum to {total}, expected n={n}")
    return ComponentStats.from_sizes(pairs, n)


def susceptibility(stats: ComponentStats) -> float:
    if not stats.sizes:
        raise StatsError("susceptibility needs at least one component")
    return stats.chi


def order_statistics(stats: ComponentStats, i: int) -> tuple[int, int]:
    """Return ``(L_i, Lhat_i)``; both are 0 once ``i`` passes the component count."""

    if i < 1:
        raise StatsError("order statistic index must be at least 1")
    return stats.L(i), stats.L_hat(i)


def summarize(values: Iterable[float]) -> MetricSummary:
    data = np.asarray(list(values), dtype=np.float64)
    if data.size == 0:
        raise StatsError("cannot summarize an empty sample")
    finite = data[np.isfinite(data)]
    if finite.size == 0:
        nan = math.nan
        return MetricSummary(mean=nan, stderr=nan, median=nan, p01=nan, p99=nan, count=0)
    stderr = float(finite.std(ddof=1) / math.sqrt(finite.size)) if finite.size > 1 else 0.0
    # nearest-rank percentiles
    p01, median, p99 = np.percentile(finite, [1, 50, 99], method="inverted_cdf")
    return MetricSummary(
        mean=float(finite.mean()),
        stderr=stderr,
        median=float(median),
        p01=float(p01),
        p99=float(p99),
        count=int(finite.size),
    )


def _value(selector: MetricSelector | str, item: Any) -> float:
    if callable(selector):
        value = selector(item)
    elif isinstance(item, Mapping):
        value = item[selector]
    else:
        value = getattr(item, selector)
    return math.nan if value is None else float(value)


def aggregate(
    reports: Sequence[Any],
    selectors: Mapping[str, MetricSelector | str],
    seeds: Sequence[int] = (),
) -> RunAggregate:
    """Summarize each selected metric over ``reports``.

    Selectors are callables or attribute/key names; a metric that is ``None``
    for some report is treated as missing for that report only.
    """

    if not reports:
        raise StatsError("aggregate needs at least one report")
    metrics = {
        name: summarize(_value(selector, report) for report in reports)
        for name, selector in selectors.items()
    }
    return RunAggregate(metrics=metrics, runs=len(reports), seeds=list(seeds))


def final_l1(report: ProcessReport) -> float:
    return float(report.final_stats.L(1))


def snapshot_metric(step: int, metric: str) -> MetricSelector:
    """Selector reading ``metric`` (``L1``, ``chi``, ...) from the snapshot at ``step``."""

    def select(report: ProcessReport) -> float:
        stats = report.snapshots.get(step)
        if stats is None:
            return math.nan
        if metric == "chi":
            return stats.chi
        return float(stats.as_dict()[metric])

    return select
