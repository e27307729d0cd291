"""Edge-first greedy multiway cut, an exact small-instance oracle and example graphs."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import STREAM_PAIRS, make_generator
from fusionproc.core.partition import make_partition
from fusionproc.models import CutResult, MergeOutcome, OracleResult, WeightedGraph

logger = logging.getLogger(__name__)

Edge = tuple[int, int, float]

_ORACLE_CHUNK = 1 << 16


class GraphFormatError(ValueError):
    """Raised for malformed graph input; ``line_number`` is 1-based when known."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class OracleLimitError(ValueError):
    """Raised when an instance has too many labelings to enumerate."""


class TerminalError(ValueError):
    """Raised for too few, repeated or out-of-range terminals."""


def _normalize_edge(
    n: int, u: int, v: int, w: float, seen: set[tuple[int, int]], line_number: Optional[int] = None
) -> Edge:
    if u > v:
        u, v = v, u
    if u == v:
        raise GraphFormatError(f"self-loop on vertex {u}", line_number)
    if u < 0 or v >= n:
        raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}", line_number)
    if not math.isfinite(w) or w < 0:
        raise GraphFormatError(f"edge ({u}, {v}) has invalid weight {w!r}", line_number)
    if (u, v) in seen:
        raise GraphFormatError(f"duplicate edge ({u}, {v})", line_number)
    seen.add((u, v))
    return u, v, w


def make_graph(n: int, edges: Iterable[Sequence[float]]) -> WeightedGraph:
    if n < 1:
        raise GraphFormatError("vertex count must be at least 1")
    seen: set[tuple[int, int]] = set()
    normalized = [_normalize_edge(n, int(u), int(v), float(w), seen) for u, v, w in edges]
    return WeightedGraph(n=n, edges=tuple(normalized))


def parse_graph_text(text: str) -> WeightedGraph:
    """Parse ``"n m"`` followed by ``m`` lines of ``"u v w"``; blank lines are skipped."""

    rows = [(number, line.split()) for number, line in enumerate(text.splitlines(), start=1)]
    rows = [(number, fields) for number, fields in rows if fields]
    if not rows:
        raise GraphFormatError("empty graph file", 1)
    header_line, header = rows[0]
    if len(header) != 2:
        raise GraphFormatError("header must be 'n m'", header_line)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError as exc:
        raise GraphFormatError("header must hold two integers", header_line) from exc
    if n < 1 or m < 0:
        raise GraphFormatError("header values out of range", header_line)
    body = rows[1:]

    edges: list[Edge] = []
    seen: set[tuple[int, int]] = set()
    for number, fields in body:
        if len(fields) != 3:
            raise GraphFormatError("edge line must be 'u v w'", number)
        try:
            u, v, w = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError as exc:
            raise GraphFormatError(f"cannot parse edge {' '.join(fields)!r}", number) from exc
        edges.append(_normalize_edge(n, u, v, w, seen, number))
    if len(edges) != m:
        raise GraphFormatError(f"expected {m} edge lines, found {len(edges)}", header_line)
    return WeightedGraph(n=n, edges=tuple(edges))


def parse_graph_file(path: str | Path) -> WeightedGraph:
    return parse_graph_text(Path(path).read_text(encoding="utf-8"))


def parse_terminals(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise TerminalError(f"terminals must be comma-separated integers, got {text!r}") from exc


def _check_terminals(g: WeightedGraph, terminals: Iterable[int]) -> list[int]:
    terminal_list = list(terminals)
    if len(set(terminal_list)) != len(terminal_list):
        raise TerminalError("terminals must be distinct")
    if len(terminal_list) < 2:
        raise TerminalError("a multiway cut needs at least two terminals")
    for vertex in terminal_list:
        if not 0 <= vertex < g.n:
            raise TerminalError(f"terminal {vertex} out of range for n={g.n}")
    return sorted(terminal_list)


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """K_n with edges listed in pair-index order."""

    return WeightedGraph(
        n=n, edges=tuple((u, v, float(weight)) for v in range(n) for u in range(v))
    )


def build_example_graph(n: int, epsilon: float) -> tuple[WeightedGraph, list[int]]:
    """K_{n^2} on vertices ``i * n + j``; same-column edges weigh ``1 + epsilon``.

    The terminals are the first row. Greedy keeps every column clique and
    nothing else, while cutting along rows is much cheaper.
    """

    if n < 2:
        raise GraphFormatError("the example needs n >= 2")
    if not epsilon > 0:
        raise GraphFormatError("epsilon must be positive")
    heavy = 1.0 + epsilon
    vertices = n * n
    edges = tuple(
        (u, v, heavy if u % n == v % n else 1.0) for v in range(vertices) for u in range(v)
    )
    return WeightedGraph(n=vertices, edges=edges), list(range(n))


def edge_first_greedy(g: WeightedGraph, terminals: Iterable[int], seed: int) -> CutResult:
    """Scan edges by decreasing weight, keeping each unless it joins two terminals.

    Ties are broken by a seeded uniform shuffle applied before a stable sort.
    """

    terminal_list = _check_terminals(g, terminals)
    edges = g.edges
    shuffled = make_generator(seed, STREAM_PAIRS).permutation(len(edges)).tolist()
    order = sorted(shuffled, key=lambda index: -edges[index][2])

    partition = make_partition(g.n, terminal_list)
    retained: list[Edge] = []
    removed: list[Edge] = []
    for index in order:
        edge = edges[index]
        if partition.try_union_kprocess(edge[0], edge[1]) is MergeOutcome.COLLISION:
            removed.append(edge)
        else:
            retained.append(edge)
    result = CutResult(
        retained_edges=tuple(retained),
        removed_edges=tuple(removed),
        retained_weight=math.fsum(w for _, _, w in retained),
        removed_weight=math.fsum(w for _, _, w in removed),
        components=tuple(partition.component_labels()),
    )
    logger.debug(
        "Greedy cut on n=%s with %s terminals removed %s edges of weight %s",
        g.n,
        len(terminal_list),
        len(removed),
        result.removed_weight,
    )
    return result


def terminals_separated(result: CutResult, terminals: Iterable[int]) -> bool:
    labels = [result.components[vertex] for vertex in terminals]
    return len(set(labels)) == len(labels)


def brute_force_multiway_cut(
    g: WeightedGraph,
    terminals: Iterable[int],
    limit: Optional[int] = None,
) -> OracleResult:
    """Exact multiway cut by enumerating terminal labelings of the other vertices.

    Terminal ``i`` (in sorted order) carries label ``i``. The first labeling
    of minimum cross-label weight in enumeration order is returned.
    """

    terminal_list = _check_terminals(g, terminals)
    limit = get_settings().oracle_limit if limit is None else limit
    labels = len(terminal_list)
    terminal_set = set(terminal_list)
    free = [vertex for vertex in range(g.n) if vertex not in terminal_set]
    combinations = labels ** len(free)
    if combinations > limit:
        raise OracleLimitError(
            f"{combinations} labelings exceed the oracle limit of {limit}"
        )

    base = np.zeros(g.n, dtype=np.int64)
    for label, vertex in enumerate(terminal_list):
        base[vertex] = label
    if g.edges:
        u = np.fromiter((edge[0] for edge in g.edges), dtype=np.int64, count=len(g.edges))
        v = np.fromiter((edge[1] for edge in g.edges), dtype=np.int64, count=len(g.edges))
        w = np.fromiter((edge[2] for edge in g.edges), dtype=np.float64, count=len(g.edges))
    else:
        u = v = np.zeros(0, dtype=np.int64)
        w = np.zeros(0, dtype=np.float64)
    powers = labels ** np.arange(len(free), dtype=np.int64)
    free_index = np.asarray(free, dtype=np.int64)

    best_code = 0
    best_weight = math.inf
    for start in range(0, combinations, _ORACLE_CHUNK):
        codes = np.arange(start, min(start + _ORACLE_CHUNK, combinations), dtype=np.int64)
        labeling = np.broadcast_to(base, (codes.size, g.n)).copy()
        if free:
            labeling[:, free_index] = (codes[:, None] // powers) % labels
        cut = ((labeling[:, u] != labeling[:, v]) * w).sum(axis=1)
        position = int(np.argmin(cut))
        if cut[position] < best_weight:
            best_weight = float(cut[position])
            best_code = int(codes[position])

    labeling = base.copy()
    if free:
        labeling[free_index] = (best_code // powers) % labels
    witness = tuple(edge for edge in g.edges if labeling[edge[0]] != labeling[edge[1]])
    return OracleResult(
        removed_weight=math.fsum(weight for _, _, weight in witness),
        removed_edges=witness,
        labeling=tuple(int(label) for label in labeling),
    )
