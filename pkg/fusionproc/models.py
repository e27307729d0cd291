"""Runtime records produced by the simulators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple


class MergeOutcome(str, Enum):
    MERGED = "merged"
    SAME_COMPONENT = "same_component"
    COLLISION = "collision"


class StopRule(str, Enum):
    AT_K_COMPONENTS = "at_k_components"
    AT_STEP = "at_step"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class ComponentStats:
    """Order statistics of one partition state.

    ``sizes`` and ``special_sizes`` are sorted in descending order. Indices
    passed to :meth:`L` and :meth:`L_hat` are 1-based and return ``0`` past
    the end so aggregation stays total.
    """

    n: int
    sizes: Tuple[int, ...]
    special_sizes: Tuple[int, ...]

    @classmethod
    def from_sizes(cls, pairs: Sequence[Tuple[int, int]], n: int) -> "ComponentStats":
        """Build stats from ``(size, special_count)`` pairs in any order."""

        ordered = sorted(pairs, key=lambda item: (-item[0], -item[1]))
        return cls(
            n=n,
            sizes=tuple(size for size, _ in ordered),
            special_sizes=tuple(size for size, count in ordered if count > 0),
        )

    @classmethod
    def from_partition(cls, partition: Any) -> "ComponentStats":
        return cls.from_sizes(partition.component_sizes(), partition.n)

    def L(self, i: int) -> int:
        if i < 1:
            raise ValueError("order statistic index must be at least 1")
        return self.sizes[i - 1] if i <= len(self.sizes) else 0

    def L_hat(self, i: int) -> int:
        if i < 1:
            raise ValueError("order statistic index must be at least 1")
        return self.special_sizes[i - 1] if i <= len(self.special_sizes) else 0

    @property
    def chi(self) -> float:
        return sum(size * size for size in self.sizes) / self.n

    @property
    def special_total(self) -> int:
        return sum(self.special_sizes)

    def lhat_tail_sum(self, start: int = 2) -> int:
        if start < 1:
            raise ValueError("start index must be at least 1")
        return sum(self.special_sizes[start - 1 :])

    def as_dict(self) -> dict[str, Any]:
        return {
            "components": len(self.sizes),
            "L1": self.L(1),
            "L2": self.L(2),
            "Lhat1": self.L_hat(1),
            "Lhat2": self.L_hat(2),
            "special_components": len(self.special_sizes),
            "special_total": self.special_total,
            "lhat_tail_sum": self.lhat_tail_sum(2),
            "chi": self.chi,
        }


@dataclass(frozen=True)
class EventRecord:
    name: str
    step: int
    value: Optional[float] = None

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "step": self.step, "value": self.value}


@dataclass
class ProcessReport:
    """Outcome of one process run.

    ``M`` counts accepted pairs, ``collisions`` rejected ones and
    ``considered`` their sum. Runs stopped early at k components carry the
    analytic completion of all three, so they compare equal to exhaustive
    runs over the same stream. ``steps_simulated`` and ``trace`` describe
    how the run was executed and are excluded from equality.
    """

    n: int
    k: int
    final_sizes: List[Tuple[int, int]]
    M: int
    M_hat: Optional[int]
    collisions: int
    considered: int
    snapshots: Dict[int, ComponentStats] = field(default_factory=dict)
    events: List[EventRecord] = field(default_factory=list)
    steps_simulated: int = field(default=0, compare=False)
    trace: Optional[List[Tuple[int, int, int, str]]] = field(default=None, compare=False)

    @property
    def final_stats(self) -> ComponentStats:
        return ComponentStats.from_sizes(self.final_sizes, self.n)

    def event_step(self, name: str) -> Optional[int]:
        for record in self.events:
            if record.name == name:
                return record.step
        return None

    def as_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "M": self.M,
            "M_hat": self.M_hat,
            "collisions": self.collisions,
            "considered": self.considered,
            "steps_simulated": self.steps_simulated,
            "final": self.final_stats.as_dict(),
            "final_sizes": [list(pair) for pair in self.final_sizes],
            "snapshots": {str(step): stats.as_dict() for step, stats in sorted(self.snapshots.items())},
            "events": [record.as_dict() for record in self.events],
        }


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    edges: Tuple[Tuple[int, int, float], ...]

    @property
    def total_weight(self) -> float:
        return math.fsum(weight for _, _, weight in self.edges)


@dataclass(frozen=True)
class CutResult:
    retained_edges: Tuple[Tuple[int, int, float], ...]
    removed_edges: Tuple[Tuple[int, int, float], ...]
    retained_weight: float
    removed_weight: float
    components: Tuple[int, ...]

    def component_sizes(self) -> list[int]:
        counts: dict[int, int] = {}
        for label in self.components:
            counts[label] = counts.get(label, 0) + 1
        return sorted(counts.values(), reverse=True)

    def as_dict(self) -> dict[str, Any]:
        return {
            "retained_edges": len(self.retained_edges),
            "removed_edges": len(self.removed_edges),
            "retained_weight": self.retained_weight,
            "removed_weight": self.removed_weight,
            "component_sizes": self.component_sizes(),
        }


@dataclass(frozen=True)
class OracleResult:
    removed_weight: float
    removed_edges: Tuple[Tuple[int, int, float], ...]
    labeling: Tuple[int, ...]


@dataclass(frozen=True)
class CxyTrajectory:
    t: Tuple[int, ...]
    X: Tuple[int, ...]
    Y: Tuple[int, ...]
    p: Tuple[float, ...]

    @property
    def final_ratio(self) -> float:
        return self.X[-1] / self.t[-1]


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    stderr: float
    median: float
    p01: float
    p99: float
    count: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "median": self.median,
            "p01": self.p01,
            "p99": self.p99,
            "count": self.count,
        }


@dataclass
class RunAggregate:
    metrics: Dict[str, MetricSummary]
    runs: int
    seeds: List[int] = field(default_factory=list)

    def __getitem__(self, metric: str) -> MetricSummary:
        return self.metrics[metric]
