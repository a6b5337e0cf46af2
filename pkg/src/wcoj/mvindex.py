"""Multi-version keyed index: answer "what does key map to as of time t".

Updates are (key, value, time, weight) with signed weights. Entries live in
three regions: a consolidated committed region (per key, time-sorted, at most
one entry per (time, value)), a committed-but-unconsolidated append region,
and an uncommitted region for times at or past the frontier. The frontier is
the least timestamp that may still receive updates; moving it forward commits
everything earlier. Consolidation merges only entries with equal (time, value)
and drops exact zeros, so no query answer ever changes because of it.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable

from .errors import FrontierRegression, RangeError, StaleTimestamp
from .relations import SignedUpdate

_EMPTY: tuple[int, ...] = ()


class MultiVersionIndex:
    def __init__(self, start_frontier: int = 0):
        self.frontier = start_frontier
        self._compacted: dict[tuple, list[tuple[int, int, int]]] = {}
        self._pending: dict[tuple, list[tuple[int, int, int]]] = defaultdict(list)
        self._uncommitted: dict[tuple, list[tuple[int, int, int]]] = defaultdict(list)
        self.negative_weight_events = 0

    def ingest(self, updates: Iterable[tuple[tuple, int, int, int]]) -> None:
        """Add (key, value, time, weight) records; times must be >= frontier."""
        for key, value, time, weight in updates:
            if time < self.frontier:
                raise StaleTimestamp(f"update at t={time} behind frontier {self.frontier}")
            self._uncommitted[key].append((time, value, weight))

    def advance(self, new_frontier: int) -> None:
        """Commit all updates before new_frontier; idempotent for equal values."""
        if new_frontier < self.frontier:
            raise FrontierRegression(f"{new_frontier} < {self.frontier}")
        self.frontier = new_frontier
        touched = []
        for key, entries in list(self._uncommitted.items()):
            keep = []
            moved = False
            for e in entries:
                if e[0] < new_frontier:
                    self._pending[key].append(e)
                    moved = True
                else:
                    keep.append(e)
            if moved:
                touched.append(key)
                if keep:
                    self._uncommitted[key] = keep
                else:
                    del self._uncommitted[key]
        for key in touched:
            distinct = len({v for _, v, _ in self._compacted.get(key, ())})
            if len(self._pending[key]) > 2 * max(1, distinct):
                self._consolidate_key(key)

    def consolidate(self) -> None:
        """Fold every pending entry into the consolidated region."""
        for key in list(self._pending):
            self._consolidate_key(key)

    def _consolidate_key(self, key: tuple) -> None:
        merged = defaultdict(int)
        for t, v, w in self._compacted.get(key, ()):
            merged[(t, v)] += w
        for t, v, w in self._pending.pop(key, ()):
            merged[(t, v)] += w
        rows = [(t, v, w) for (t, v), w in merged.items() if w != 0]
        rows.sort()
        if rows:
            self._compacted[key] = rows
        else:
            self._compacted.pop(key, None)

    def query_at(self, key: tuple, time: int) -> dict[int, int]:
        """Accumulated nonzero weights per value over all updates with t <= time."""
        acc: dict[int, int] = defaultdict(int)
        for t, v, w in self._compacted.get(key, ()):
            if t > time:
                break
            acc[v] += w
        for region in (self._pending, self._uncommitted):
            entries = region.get(key)
            if entries:
                for t, v, w in entries:
                    if t <= time:
                        acc[v] += w
        out = {v: w for v, w in acc.items() if w != 0}
        if any(w < 0 for w in out.values()):
            self.negative_weight_events += 1
        return out

    def keys(self) -> list[tuple]:
        seen = set(self._compacted)
        seen.update(self._pending)
        seen.update(self._uncommitted)
        return sorted(seen)

    def total_entries(self) -> int:
        return (
            sum(len(v) for v in self._compacted.values())
            + sum(len(v) for v in self._pending.values())
            + sum(len(v) for v in self._uncommitted.values())
        )


class _VersionedView:
    """count/contains/enumerate over one index pinned to a timestamp.

    Live means accumulated weight > 0. Lookups memoize the sorted live list
    per key; a view is built per evaluation pass, so the memo never outlives
    the state it reflects.
    """

    __slots__ = ("_index", "_time", "_memo", "_all_keys_live")

    def __init__(self, index: MultiVersionIndex, time: int):
        self._index = index
        self._time = time
        self._memo: dict[tuple, tuple[int, ...]] = {}
        self._all_keys_live: tuple[int, ...] | None = None

    def _live(self, key: tuple) -> tuple[int, ...]:
        got = self._memo.get(key)
        if got is None:
            acc = self._index.query_at(key, self._time)
            got = tuple(sorted(v for v, w in acc.items() if w > 0))
            self._memo[key] = got
        return got

    def count(self, key: tuple) -> int:
        return len(self._live(key))

    def contains(self, key: tuple, value: int) -> bool:
        return value in self._live(key)

    def enumerate(self, key: tuple, start: int, stop: int) -> tuple[int, ...]:
        vs = self._live(key)
        if not 0 <= start <= stop <= len(vs):
            raise RangeError(f"slice [{start}:{stop}) outside 0..{len(vs)} for key {key}")
        return vs[start:stop]


class _ProjectionView:
    """Keys of a versioned index that still have any live value, as a set."""

    __slots__ = ("_inner", "_keys")

    def __init__(self, inner: _VersionedView):
        self._inner = inner
        self._keys: tuple[int, ...] | None = None

    def _live_keys(self) -> tuple[int, ...]:
        if self._keys is None:
            self._keys = tuple(
                sorted(k[0] for k in self._inner._index.keys() if self._inner.count(k))
            )
        return self._keys

    def count(self, key: tuple) -> int:
        assert key == ()
        return len(self._live_keys())

    def contains(self, key: tuple, value: int) -> bool:
        return self._inner.count((value,)) > 0

    def enumerate(self, key: tuple, start: int, stop: int) -> tuple[int, ...]:
        vs = self._live_keys()
        if not 0 <= start <= stop <= len(vs):
            raise RangeError(f"slice [{start}:{stop}) outside 0..{len(vs)}")
        return vs[start:stop]


class DynamicGraphStore:
    """Forward and reverse multi-version adjacency for one binary relation."""

    def __init__(
        self,
        initial_edges: Iterable[tuple[int, int]] = (),
        *,
        load_time: int = 0,
    ):
        self.fwd = MultiVersionIndex(start_frontier=load_time)
        self.rev = MultiVersionIndex(start_frontier=load_time)
        initial = sorted(set(initial_edges))
        if initial:
            self.fwd.ingest(((u,), v, load_time, 1) for u, v in initial)
            self.rev.ingest(((v,), u, load_time, 1) for u, v in initial)
            self.advance(load_time + 1)

    @property
    def frontier(self) -> int:
        return self.fwd.frontier

    def ingest(self, batch: Iterable[SignedUpdate]) -> None:
        batch = list(batch)
        self.fwd.ingest(((u.values[0],), u.values[1], u.time, u.weight) for u in batch)
        self.rev.ingest(((u.values[1],), u.values[0], u.time, u.weight) for u in batch)

    def advance(self, new_frontier: int) -> None:
        self.fwd.advance(new_frontier)
        self.rev.advance(new_frontier)

    def consolidate(self) -> None:
        self.fwd.consolidate()
        self.rev.consolidate()

    def view(self, key_positions: tuple[int, ...], ext_position: int, time: int):
        """Extension view matching the static index signatures for a binary base."""
        if key_positions == (0,) and ext_position == 1:
            return _VersionedView(self.fwd, time)
        if key_positions == (1,) and ext_position == 0:
            return _VersionedView(self.rev, time)
        if key_positions == () and ext_position == 0:
            return _ProjectionView(_VersionedView(self.fwd, time))
        if key_positions == () and ext_position == 1:
            return _ProjectionView(_VersionedView(self.rev, time))
        raise ValueError(f"no dynamic view for signature {(key_positions, ext_position)}")

    def edges_at(self, time: int) -> set[tuple[int, int]]:
        out = set()
        for key in self.fwd.keys():
            for v, w in self.fwd.query_at(key, time).items():
                if w > 0:
                    out.add((key[0], v))
        return out

    def negative_weight_events(self) -> int:
        return self.fwd.negative_weight_events + self.rev.negative_weight_events
