"""Extension indexes: key-tuple to sorted extension values.

One physical index exists per (base relation, key columns, value column)
signature and is shared by every atom and prefix level that needs that shape.
For a binary edge relation this collapses to four indexes at most: the two
endpoint projections and the forward and reverse adjacency maps.

Each index answers three things about a key: how many extensions it has (O(1)),
whether a given value is among them (O(1)), and any ascending slice of them.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping

from .errors import RangeError, ResolverMiss
from .hashing import hash_values, owner_of

_EMPTY: tuple[int, ...] = ()


class ExtensionIndex:
    """Sorted extension lists plus a membership set, keyed by value tuples."""

    __slots__ = ("key_positions", "ext_position", "_sorted", "_sets")

    def __init__(
        self,
        rows: Iterable[tuple[int, ...]],
        key_positions: tuple[int, ...],
        ext_position: int,
    ):
        self.key_positions = key_positions
        self.ext_position = ext_position
        by_key: dict[tuple[int, ...], set[int]] = defaultdict(set)
        for row in rows:
            by_key[tuple(row[i] for i in key_positions)].add(row[ext_position])
        self._sets = dict(by_key)
        self._sorted = {k: tuple(sorted(vs)) for k, vs in by_key.items()}

    def count(self, key: tuple[int, ...]) -> int:
        vs = self._sorted.get(key)
        return 0 if vs is None else len(vs)

    def contains(self, key: tuple[int, ...], value: int) -> bool:
        vs = self._sets.get(key)
        return vs is not None and value in vs

    def enumerate(self, key: tuple[int, ...], start: int, stop: int) -> tuple[int, ...]:
        """Extensions of key at ranks [start, stop), ascending."""
        vs = self._sorted.get(key, _EMPTY)
        if not 0 <= start <= stop <= len(vs):
            raise RangeError(f"slice [{start}:{stop}) outside 0..{len(vs)} for key {key}")
        return vs[start:stop]

    def keys(self) -> Iterable[tuple[int, ...]]:
        return self._sorted.keys()

    def total_entries(self) -> int:
        return sum(len(vs) for vs in self._sorted.values())


class IndexCatalog:
    """Builds and caches one ExtensionIndex per signature over static relations.

    Static relations are deduplicated at build time (set semantics); the
    deterministic row order fixes dict iteration order everywhere downstream.
    """

    def __init__(self, relations: Mapping[str, Iterable[tuple[int, ...]]]):
        self.rows = {name: sorted(set(map(tuple, rows))) for name, rows in relations.items()}
        self._cache: dict[tuple, ExtensionIndex] = {}

    def bases(self) -> Iterable[str]:
        return self.rows.keys()

    def index_for(
        self, base: str, key_positions: tuple[int, ...], ext_position: int
    ) -> ExtensionIndex:
        sig = (base, key_positions, ext_position)
        idx = self._cache.get(sig)
        if idx is None:
            idx = ExtensionIndex(self.rows[base], key_positions, ext_position)
            self._cache[sig] = idx
        return idx

    def built_indexes(self) -> list[tuple[tuple, ExtensionIndex]]:
        return sorted(self._cache.items(), key=lambda kv: kv[0])

    def indexed_per_worker(self, workers: int, seed: int) -> list[int]:
        """Tuples held per worker when each key's list lives at hash(key) % w."""
        loads = [0] * workers
        for _, idx in self.built_indexes():
            for key in idx._sorted:
                loads[owner_of(key, workers, seed)] += len(idx._sorted[key])
        return loads


# --- skew-resilient triple ---
#
# The balanced engine never ships whole extension lists. It talks to three
# sharded views of the same data: per-key counts (sharded by key), positional
# lookups "k-th smallest extension of key" (sharded by key+rank so one hot key
# spreads over all workers), and single membership bits (sharded by key+value).


class CountIndex:
    __slots__ = ("_ext",)

    def __init__(self, ext: ExtensionIndex):
        self._ext = ext

    def count(self, key: tuple[int, ...]) -> int:
        return self._ext.count(key)

    def owner(self, key: tuple[int, ...], workers: int, seed: int) -> int:
        return owner_of(key, workers, seed)


class ExtResolverIndex:
    """Maps (key, k) to the k-th smallest extension of key, 1-based."""

    __slots__ = ("_ext",)

    def __init__(self, ext: ExtensionIndex):
        self._ext = ext

    def resolve(self, key: tuple[int, ...], k: int) -> int:
        vs = self._ext._sorted.get(key)
        if vs is None or not 1 <= k <= len(vs):
            raise ResolverMiss(f"no rank {k} under key {key}")
        return vs[k - 1]

    def owner(self, key: tuple[int, ...], k: int, workers: int, seed: int) -> int:
        return owner_of(key + (k,), workers, seed)


class MembershipIndex:
    __slots__ = ("_ext",)

    def __init__(self, ext: ExtensionIndex):
        self._ext = ext

    def contains(self, key: tuple[int, ...], value: int) -> bool:
        return self._ext.contains(key, value)

    def owner(self, key: tuple[int, ...], value: int, workers: int, seed: int) -> int:
        return owner_of(key + (value,), workers, seed)


def build_skew_triple(ext: ExtensionIndex) -> tuple[CountIndex, ExtResolverIndex, MembershipIndex]:
    return CountIndex(ext), ExtResolverIndex(ext), MembershipIndex(ext)


def skew_indexed_per_worker(
    indexes: Iterable[ExtensionIndex], workers: int, seed: int
) -> list[int]:
    """Per-worker entry counts for the three sharded views of each index.

    Counts one entry per key (counts), one per (key, rank) and one per
    (key, value); a single high-degree key therefore spreads its bulk.
    """
    loads = [0] * workers
    for idx in indexes:
        for key, vs in idx._sorted.items():
            loads[owner_of(key, workers, seed)] += 1
            for rank in range(1, len(vs) + 1):
                loads[owner_of(key + (rank,), workers, seed)] += 1
            for v in vs:
                loads[owner_of(key + (v,), workers, seed)] += 1
    return loads


def shard_key_hash(key: tuple[int, ...], seed: int) -> int:
    return hash_values(key, seed)
