"""First-trigger events observed while a process runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from fusionproc.core.partition import Partition

LARGEST_COMPONENT_SPECIAL = "largest_component_special"
COMPONENT_COUNT_REACHES = "component_count_reaches"
LARGEST_COMPONENT_AT_LEAST = "largest_component_at_least"

EventPredicate = Callable[[int, Partition], bool]
EventMeasure = Callable[[Partition], float]


@dataclass(frozen=True)
class EventSpec:
    """A named predicate over the partition, watched from ``first_step`` on.

    The first step at which it holds is recorded together with ``measure``
    of the partition at that step, and the event is never evaluated again.
    Predicates must depend on the partition only: the engine evaluates them
    at ``first_step`` (step 0 is the empty graph) and after every later
    merge, which finds the same first step as checking after every pair.
    """

    name: str
    predicate: EventPredicate
    first_step: int = 0
    measure: Optional[EventMeasure] = None


def _largest_size(partition: Partition) -> float:
    return float(partition.largest_size)


def largest_component_special(after_step: int = 0, name: str = LARGEST_COMPONENT_SPECIAL) -> EventSpec:
    """Fire at the first step after ``after_step`` whose largest component is special."""

    return EventSpec(
        name=name,
        predicate=lambda step, partition: partition.largest_is_special(),
        first_step=after_step + 1,
        measure=_largest_size,
    )


def component_count_reaches(k: int, name: str = COMPONENT_COUNT_REACHES) -> EventSpec:
    return EventSpec(
        name=name,
        predicate=lambda step, partition: partition.num_components <= k,
        measure=_largest_size,
    )


def largest_component_at_least(size: int, name: str = LARGEST_COMPONENT_AT_LEAST) -> EventSpec:
    return EventSpec(
        name=name,
        predicate=lambda step, partition: partition.largest_size >= size,
    )
