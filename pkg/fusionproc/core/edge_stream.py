"""Seeded sampler of vertex pairs, uniform without repetition.

Pairs map to indices by the colexicographic rule ``index(u, v) =
v * (v - 1) / 2 + u`` for ``u < v``. Randomness comes from numpy's Philox
counter-based generator keyed by a ``SeedSequence`` built from the run seed,
so a stream is fully determined by ``(n, seed, mode, batch_size)``.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Iterator, Optional

import numpy as np

from fusionproc.core.config import get_settings

logger = logging.getLogger(__name__)

GENERATOR_NAME = "numpy.random.Philox"
MAX_SHUFFLE_N = 1 << 16
SEED_LIMIT = 1 << 64

STREAM_PAIRS = 0
STREAM_SPECIALS = 1
STREAM_GNP = 2
STREAM_CXY = 4


class StreamMode(str, Enum):
    LAZY = "lazy"
    FULL_SHUFFLE = "full_shuffle"


class StreamExhaustedError(RuntimeError):
    """Raised when every pair of the vertex set has been emitted."""


class StreamConfigError(ValueError):
    """Raised for invalid vertex counts, seeds or oversize shuffles."""


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(u: int, v: int) -> int:
    if u > v:
        u, v = v, u
    if u == v or u < 0:
        raise StreamConfigError(f"({u}, {v}) is not a pair of distinct vertices")
    return v * (v - 1) // 2 + u


def index_to_pair(index: int) -> tuple[int, int]:
    if index < 0:
        raise StreamConfigError("pair index must be non-negative")
    v = (1 + math.isqrt(1 + 8 * index)) // 2
    base = v * (v - 1) // 2
    return index - base, v


def decode_indices(indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized inverse of :func:`pair_index`."""

    indices = np.asarray(indices, dtype=np.int64)
    v = ((1.0 + np.sqrt(1.0 + 8.0 * indices.astype(np.float64))) // 2.0).astype(np.int64)
    v -= (v * (v - 1) // 2 > indices).astype(np.int64)
    v += ((v + 1) * v // 2 <= indices).astype(np.int64)
    u = indices - v * (v - 1) // 2
    return u, v


def make_generator(seed: int, stream: int = STREAM_PAIRS) -> np.random.Generator:
    """Return the Philox generator for ``seed`` on an independent sub-stream."""

    if not 0 <= seed < SEED_LIMIT:
        raise StreamConfigError(f"seed must be in [0, 2**64), got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


class _SeenIndex:
    """Set of emitted pair indices kept as sorted int64 runs.

    Runs are merged whenever the newest run is at least as long as the one
    before it, so lookups touch O(log size) sorted arrays.
    """

    def __init__(self) -> None:
        self._levels: list[np.ndarray] = []
        self.count = 0

    def contains(self, candidates: np.ndarray) -> np.ndarray:
        found = np.zeros(candidates.shape, dtype=bool)
        for level in self._levels:
            pos = np.searchsorted(level, candidates)
            pos[pos == level.size] = level.size - 1
            found |= level[pos] == candidates
        return found

    def add(self, accepted: np.ndarray) -> None:
        if accepted.size == 0:
            return
        self._levels.append(np.sort(accepted))
        self.count += int(accepted.size)
        levels = self._levels
        while len(levels) > 1 and levels[-2].size <= levels[-1].size:
            top = levels.pop()
            levels[-1] = np.sort(np.concatenate((levels[-1], top)), kind="mergesort")

    def as_array(self) -> np.ndarray:
        if not self._levels:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(self._levels))


class EdgeStream:
    """Lazily emits the pair sequence e_1, e_2, ... of one run.

    In lazy mode a refill draws ``batch_size`` uniform indices, keeps the
    first occurrence of each index that has not been emitted or buffered
    before, and queues them in draw order; this is exactly sequential
    rejection sampling. Once more than half of all pairs are taken and
    ``n <= 2**16`` the remaining indices are shuffled and replayed instead.
    Full-shuffle mode permutes every index up front.
    """

    def __init__(
        self,
        n: int,
        seed: int,
        mode: StreamMode = StreamMode.LAZY,
        batch_size: Optional[int] = None,
    ) -> None:
        if n < 2:
            raise StreamConfigError("an edge stream needs at least two vertices")
        self.n = n
        self.seed = seed
        self.mode = StreamMode(mode)
        self.total = pair_count(n)
        self.emitted = 0
        self.batch_size = batch_size or get_settings().stream_batch_size
        self._rng = make_generator(seed, STREAM_PAIRS)
        self._seen = _SeenIndex()
        self._order: Optional[np.ndarray] = None
        self._order_pos = 0
        self._buf_u: list[int] = []
        self._buf_v: list[int] = []
        self._pos = 0
        self.switched = False
        if self.mode is StreamMode.FULL_SHUFFLE:
            if n > MAX_SHUFFLE_N:
                raise StreamConfigError(
                    f"full-shuffle mode supports n <= {MAX_SHUFFLE_N}, got n={n}"
                )
            self._order = self._rng.permutation(self.total).astype(np.int64)

    @property
    def remaining(self) -> int:
        return self.total - self.emitted

    def _replay(self) -> None:
        order = self._order
        assert order is not None
        chunk = order[self._order_pos : self._order_pos + self.batch_size]
        self._order_pos += chunk.size
        u, v = decode_indices(chunk)
        self._buf_u = u.tolist()
        self._buf_v = v.tolist()
        self._pos = 0

    def _switch_to_shuffle(self) -> None:
        unseen = np.setdiff1d(
            np.arange(self.total, dtype=np.int64), self._seen.as_array(), assume_unique=True
        )
        self._order = self._rng.permutation(unseen)
        self._order_pos = 0
        self.switched = True
        logger.debug(
            "Edge stream n=%s seed=%s switched to shuffle replay after %s pairs",
            self.n,
            self.seed,
            self.emitted,
        )

    def _refill(self) -> None:
        while True:
            if self._order is not None:
                self._replay()
                return
            if self.n <= MAX_SHUFFLE_N and 2 * self._seen.count > self.total:
                self._switch_to_shuffle()
                continue
            size = min(self.batch_size, max(16, self.total))
            draws = self._rng.integers(0, self.total, size=size, dtype=np.int64)
            _, first = np.unique(draws, return_index=True)
            first.sort()
            candidates = draws[first]
            accepted = candidates[~self._seen.contains(candidates)]
            if accepted.size == 0:
                continue
            self._seen.add(accepted)
            u, v = decode_indices(accepted)
            self._buf_u = u.tolist()
            self._buf_v = v.tolist()
            self._pos = 0
            return

    def next_pair(self) -> tuple[int, int]:
        if self.emitted >= self.total:
            raise StreamExhaustedError(
                f"all {self.total} pairs of n={self.n} have been emitted"
            )
        if self._pos >= len(self._buf_u):
            self._refill()
        pos = self._pos
        self._pos = pos + 1
        self.emitted += 1
        return self._buf_u[pos], self._buf_v[pos]

    def pending_block(self, limit: int) -> tuple[list[int], list[int], int, int]:
        """Expose up to ``limit`` buffered pairs as ``(us, vs, start, stop)``.

        Nothing is consumed; call :meth:`consume` with the number of pairs
        actually used. The lists are the stream's own buffers.
        """

        if self.emitted >= self.total:
            raise StreamExhaustedError(
                f"all {self.total} pairs of n={self.n} have been emitted"
            )
        if self._pos >= len(self._buf_u):
            self._refill()
        stop = min(len(self._buf_u), self._pos + max(1, limit))
        return self._buf_u, self._buf_v, self._pos, stop

    def consume(self, count: int) -> None:
        if count > len(self._buf_u) - self._pos:
            raise StreamConfigError(f"cannot consume {count} pairs past the buffered block")
        self._pos += count
        self.emitted += count

    def __iter__(self) -> Iterator[tuple[int, int]]:
        while self.emitted < self.total:
            yield self.next_pair()

    def take(self, count: int) -> list[tuple[int, int]]:
        return [self.next_pair() for _ in range(count)]


def lazy_stream(n: int, seed: int, batch_size: Optional[int] = None) -> EdgeStream:
    return EdgeStream(n, seed, StreamMode.LAZY, batch_size)


def full_shuffle_stream(n: int, seed: int, batch_size: Optional[int] = None) -> EdgeStream:
    return EdgeStream(n, seed, StreamMode.FULL_SHUFFLE, batch_size)


def open_stream(
    n: int, seed: int, mode: StreamMode = StreamMode.LAZY, batch_size: Optional[int] = None
) -> EdgeStream:
    return EdgeStream(n, seed, mode, batch_size)
