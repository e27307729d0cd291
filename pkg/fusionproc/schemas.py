from __future__ import annotations

from typing import Any, List, Literal, Optional, Tuple

import re

from pydantic import BaseModel, Field, conint, root_validator, validator

from fusionproc.core.edge_stream import StreamMode
from fusionproc.models import StopRule

Seed = conint(ge=0, lt=2**64)
VertexCount = conint(ge=1)
SpecialPlacement = Literal["prefix", "random"]

_INLINE_SEQUENCE = re.compile(r"^\s*(\d+)\s*[xX*]\s*(\d+)\s*$")


class ProcessConfig(BaseModel):
    n: VertexCount
    k: Optional[conint(ge=1)] = None
    family: Optional[List[List[int]]] = None
    seed: Seed = 1
    snapshot_steps: List[conint(ge=0)] = Field(default_factory=list)
    stop: StopRule = StopRule.AT_K_COMPONENTS
    stop_step: Optional[conint(ge=0)] = None
    record_trace: bool = False
    special_placement: SpecialPlacement = "prefix"
    stream_mode: StreamMode = StreamMode.LAZY
    batch_size: Optional[conint(ge=1)] = None
    events: Tuple[Any, ...] = ()

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("snapshot_steps")
    def _strictly_increasing(cls, value: List[int]) -> List[int]:
        for previous, current in zip(value, value[1:]):
            if current <= previous:
                raise ValueError("snapshot_steps must be strictly increasing")
        return value

    @root_validator(skip_on_failure=True)
    def _check_stop_rule(cls, values: dict[str, Any]) -> dict[str, Any]:
        n = values["n"]
        k = values.get("k")
        family = values.get("family")
        stop = values.get("stop")
        if k is not None and k > n:
            raise ValueError(f"k must not exceed n (k={k}, n={n})")
        if k is not None and family is not None:
            raise ValueError("give either k or a forbidden family, not both")
        if stop == StopRule.AT_K_COMPONENTS and k is None and family is None:
            raise ValueError("at_k_components requires special vertices or a forbidden family")
        if stop == StopRule.AT_STEP and values.get("stop_step") is None:
            raise ValueError("at_step requires stop_step")
        return values


class SweepSpec(BaseModel):
    n_values: List[conint(ge=2)]
    k_values: List[str]
    repetitions: conint(ge=1) = 1
    base_seed: Seed = 1
    omega: str = "loglog"
    stream_mode: StreamMode = StreamMode.LAZY
    special_placement: SpecialPlacement = "prefix"
    batch_size: Optional[conint(ge=1)] = None
    rows_path: Optional[str] = None
    aggregate_path: Optional[str] = None

    @validator("n_values", "k_values")
    def _non_empty(cls, value: list) -> list:
        if not value:
            raise ValueError("at least one value is required")
        return value


class CxyConfig(BaseModel):
    C: Tuple[conint(ge=1), ...] = ()
    x: conint(ge=1)
    y: conint(ge=1)
    seed: Seed = 1

    @property
    def c(self) -> int:
        return max(self.C) if self.C else 0

    @property
    def r(self) -> int:
        return len(self.C)


def parse_increment_sequence(text: str) -> Tuple[int, ...]:
    """Parse ``"5x1000"`` (1000 copies of 5) or comma-separated integers."""

    text = (text or "").strip()
    if not text:
        return ()
    parts: list[int] = []
    for chunk in text.split(","):
        match = _INLINE_SEQUENCE.match(chunk)
        if match:
            value, copies = int(match.group(1)), int(match.group(2))
            parts.extend([value] * copies)
            continue
        chunk = chunk.strip()
        if not chunk.isdigit():
            raise ValueError(f"invalid increment sequence item {chunk!r}")
        parts.append(int(chunk))
    return tuple(parts)


def read_increment_file(path: str) -> Tuple[int, ...]:
    values: list[int] = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if not line.isdigit():
                raise ValueError(f"{path}: line {line_number}: expected a positive integer, got {line!r}")
            values.append(int(line))
    return tuple(values)
