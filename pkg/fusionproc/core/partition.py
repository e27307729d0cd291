"""Disjoint-set forest with special-vertex and forbidden-set merge rules."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from fusionproc.models import MergeOutcome

_MERGED = MergeOutcome.MERGED
_SAME = MergeOutcome.SAME_COMPONENT
_COLLISION = MergeOutcome.COLLISION


class PartitionError(ValueError):
    """Raised for out-of-range vertices, self-pairs and malformed families."""


class Partition:
    """Union-find over ``n`` vertices.

    Union is by size; on equal sizes the higher-index root attaches to the
    lower-index root. ``find`` compresses paths, which never changes the
    component structure. Forbidden-set counters are kept per root as sparse
    dicts and merged small-into-large.

    The partition also tracks an incumbent largest component: it is replaced
    only when a merge produces a component strictly larger than the current
    maximum, so ``largest_root`` is stable under ties. Before the first merge
    there is no incumbent.
    """

    __slots__ = (
        "n",
        "k",
        "parent",
        "size",
        "special_count",
        "forbidden_counters",
        "forbidden_sizes",
        "num_components",
        "_largest_root",
        "_largest_size",
    )

    def __init__(
        self,
        n: int,
        special_count: list[int],
        forbidden_counters: Optional[list[Optional[dict[int, int]]]] = None,
        forbidden_sizes: Sequence[int] = (),
    ) -> None:
        self.n = n
        self.k = sum(special_count)
        self.parent = list(range(n))
        self.size = [1] * n
        self.special_count = special_count
        self.forbidden_counters = forbidden_counters if forbidden_counters is not None else [None] * n
        self.forbidden_sizes = tuple(forbidden_sizes)
        self.num_components = n
        self._largest_root = -1
        self._largest_size = 1

    def _check(self, u: int, v: int) -> None:
        n = self.n
        if not (0 <= u < n and 0 <= v < n):
            raise PartitionError(f"vertex pair ({u}, {v}) out of range for n={n}")
        if u == v:
            raise PartitionError(f"self-pair ({u}, {u}) is not a valid pair")

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def _root(self, v: int) -> int:
        parent = self.parent
        while parent[v] != v:
            v = parent[v]
        return v

    def _compress(self, v: int, root: int) -> None:
        parent = self.parent
        while parent[v] != root:
            parent[v], v = root, parent[v]

    def same_component(self, u: int, v: int) -> bool:
        return self.find(u) == self.find(v)

    def _link(self, ru: int, rv: int) -> int:
        size = self.size
        if size[ru] < size[rv] or (size[ru] == size[rv] and ru > rv):
            ru, rv = rv, ru
        self.parent[rv] = ru
        size[ru] += size[rv]
        self.special_count[ru] += self.special_count[rv]
        self.num_components -= 1
        if size[ru] > self._largest_size:
            self._largest_size = size[ru]
            self._largest_root = ru
        return ru

    def union(self, u: int, v: int) -> MergeOutcome:
        """Merge unconditionally (no special or forbidden rule)."""

        self._check(u, v)
        ru = self.find(u)
        rv = self.find(v)
        if ru == rv:
            return _SAME
        self._link(ru, rv)
        return _MERGED

    def try_union_kprocess(self, u: int, v: int) -> MergeOutcome:
        self._check(u, v)
        ru = self._root(u)
        rv = self._root(v)
        special = self.special_count
        if ru != rv and special[ru] and special[rv]:
            return _COLLISION
        self._compress(u, ru)
        self._compress(v, rv)
        if ru == rv:
            return _SAME
        self._link(ru, rv)
        return _MERGED

    def absorb_pairs(
        self,
        us: Sequence[int],
        vs: Sequence[int],
        start: int,
        stop: int,
        target: int = -1,
        stop_on_merge: bool = False,
    ) -> tuple[int, int]:
        """Apply the k-process rule to pairs ``start .. stop - 1`` in order.

        Equivalent to calling :meth:`try_union_kprocess` per pair; with no
        special vertices that is plain union. Pairs come from a stream and
        are not range-checked. Stops after the merge that leaves ``target``
        components, or after any merge when ``stop_on_merge`` is set.
        Returns ``(consumed, collisions)``.
        """

        parent = self.parent
        size = self.size
        special = self.special_count
        components = self.num_components
        largest_root = self._largest_root
        largest_size = self._largest_size
        collisions = 0
        i = start
        while i < stop:
            u = us[i]
            v = vs[i]
            i += 1
            ru = u
            while parent[ru] != ru:
                ru = parent[ru]
            rv = v
            while parent[rv] != rv:
                rv = parent[rv]
            if ru != rv and special[ru] and special[rv]:
                collisions += 1
                continue
            while parent[u] != ru:
                parent[u], u = ru, parent[u]
            while parent[v] != rv:
                parent[v], v = rv, parent[v]
            if ru == rv:
                continue
            if size[ru] < size[rv] or (size[ru] == size[rv] and ru > rv):
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
            special[ru] += special[rv]
            components -= 1
            if size[ru] > largest_size:
                largest_size = size[ru]
                largest_root = ru
            if stop_on_merge or components == target:
                break
        self.num_components = components
        self._largest_root = largest_root
        self._largest_size = largest_size
        return i - start, collisions

    def try_union_cdf(self, u: int, v: int) -> MergeOutcome:
        self._check(u, v)
        ru = self._root(u)
        rv = self._root(v)
        counters = self.forbidden_counters
        cu = counters[ru]
        cv = counters[rv]
        if ru != rv and cu and cv:
            small, large = (cu, cv) if len(cu) <= len(cv) else (cv, cu)
            sizes = self.forbidden_sizes
            for set_id, count in small.items():
                other = large.get(set_id)
                if other is not None and count + other >= sizes[set_id]:
                    return _COLLISION
        self._compress(u, ru)
        self._compress(v, rv)
        if ru == rv:
            return _SAME
        if cu and cv:
            for set_id, count in small.items():
                large[set_id] = large.get(set_id, 0) + count
            merged: Optional[dict[int, int]] = large
        else:
            merged = cu or cv
        root = self._link(ru, rv)
        counters[root] = merged
        counters[rv if root == ru else ru] = None
        return _MERGED

    def component_sizes(self) -> list[tuple[int, int]]:
        """Return ``(size, special_count)`` per component, largest first."""

        parent = self.parent
        result = [
            (self.size[v], self.special_count[v]) for v in range(self.n) if parent[v] == v
        ]
        result.sort(key=lambda item: (-item[0], -item[1]))
        return result

    def component_labels(self) -> list[int]:
        return [self.find(v) for v in range(self.n)]

    def largest_root(self) -> Optional[int]:
        return None if self._largest_root < 0 else self._largest_root

    @property
    def largest_size(self) -> int:
        return self._largest_size

    def largest_is_special(self) -> bool:
        root = self._largest_root
        return root >= 0 and self.special_count[root] > 0

    def state(self) -> tuple:
        """Hashable view of every field, used to compare states exactly."""

        return (
            tuple(self.parent),
            tuple(self.size),
            tuple(self.special_count),
            tuple(
                None if counter is None else tuple(sorted(counter.items()))
                for counter in self.forbidden_counters
            ),
            self.num_components,
            self._largest_root,
            self._largest_size,
        )


def make_partition(
    n: int,
    specials: Iterable[int] = (),
    family: Optional[Iterable[Iterable[int]]] = None,
) -> Partition:
    """Build ``n`` singleton components with the given special vertices.

    Every forbidden set must hold at least two distinct in-range vertices;
    a one-vertex set would forbid its own singleton.
    """

    if n < 1:
        raise PartitionError("vertex count must be at least 1")
    special_count = [0] * n
    for vertex in specials:
        if not 0 <= vertex < n:
            raise PartitionError(f"special vertex {vertex} out of range for n={n}")
        special_count[vertex] = 1

    if family is None:
        return Partition(n, special_count)

    counters: list[Optional[dict[int, int]]] = [None] * n
    sizes: list[int] = []
    for set_id, members in enumerate(family):
        members = list(members)
        if len(set(members)) != len(members):
            raise PartitionError(f"forbidden set {set_id} contains duplicate vertices")
        if len(members) < 2:
            raise PartitionError(f"forbidden set {set_id} must contain at least two vertices")
        for vertex in members:
            if not 0 <= vertex < n:
                raise PartitionError(f"forbidden set {set_id} vertex {vertex} out of range for n={n}")
            counter = counters[vertex]
            if counter is None:
                counter = counters[vertex] = {}
            counter[set_id] = 1
        sizes.append(len(members))
    return Partition(n, special_count, counters, sizes)
