"""JSONL and CSV output with run metadata."""

from __future__ import annotations

import csv
import json
import math
from enum import Enum
from pathlib import Path
from typing import IO, Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from fusionproc import ARTIFACT_VERSION
from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import GENERATOR_NAME


def _normalize_value(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if value is None or isinstance(value, (bool, str, int)):
        return value
    if isinstance(value, np.generic):
        return _normalize_value(value.item())
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, Mapping):
        return _normalize_mapping(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_normalize_value(item) for item in value]
    if hasattr(value, "as_dict"):
        return _normalize_mapping(value.as_dict())
    return str(value)


def _normalize_mapping(mapping: Mapping[Any, Any]) -> dict[str, Any]:
    return {str(key): _normalize_value(value) for key, value in mapping.items()}


def build_meta(
    *,
    seed: Optional[int] = None,
    stream_mode: Any = None,
    batch_size: Optional[int] = None,
    **config: Any,
) -> dict[str, Any]:
    """Metadata needed to rerun a record exactly."""

    meta: dict[str, Any] = {
        "artifact_version": ARTIFACT_VERSION,
        "generator": GENERATOR_NAME,
        "stream_batch_size": batch_size or get_settings().stream_batch_size,
    }
    if seed is not None:
        meta["seed"] = seed
    if stream_mode is not None:
        meta["stream_mode"] = stream_mode
    meta.update(config)
    return _normalize_mapping(meta)


def dumps_record(record: Mapping[str, Any]) -> str:
    return json.dumps(
        _normalize_mapping(record), sort_keys=True, ensure_ascii=False, allow_nan=False
    )


def write_jsonl(records: Iterable[Mapping[str, Any]], stream: IO[str]) -> int:
    count = 0
    for record in records:
        stream.write(dumps_record(record))
        stream.write("\n")
        count += 1
    return count


def _csv_cell(value: Any) -> Any:
    value = _normalize_value(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return value


def write_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(column)) for column in columns])


def write_csv_file(path: str | Path, rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        write_csv(rows, columns, handle)
    return target
