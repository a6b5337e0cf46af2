"""Compiled evaluation plans: who constrains each order position, and how.

A plan fixes, per order position j, the atoms whose schema contains the j-th
order attribute, each with the prefix slots that form its index key and the
index view to consult. Prefixes are tuples in order-position space; outputs
are re-permuted into attribute-id space so results compare across orders.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable, Protocol

from .relations import Filter, Query, validate_query

_FILTER_FNS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "!=": operator.ne,
}


class ExtensionView(Protocol):
    def count(self, key: tuple[int, ...]) -> int: ...
    def contains(self, key: tuple[int, ...], value: int) -> bool: ...
    def enumerate(self, key: tuple[int, ...], start: int, stop: int) -> tuple[int, ...]: ...


ViewProvider = Callable[[int, str, tuple[int, ...], int], ExtensionView]


@dataclass(frozen=True)
class LevelBinding:
    rel_pos: int
    slots: tuple[int, ...]
    view: ExtensionView

    def key_of(self, prefix: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(prefix[i] for i in self.slots)


@dataclass(frozen=True)
class CompiledFilter:
    left_slot: int
    right_slot: int
    fn: Callable[[int, int], bool]

    def holds(self, prefix: tuple[int, ...]) -> bool:
        return self.fn(prefix[self.left_slot], prefix[self.right_slot])


@dataclass(frozen=True)
class QueryPlan:
    query: Query
    bindings: tuple[tuple[LevelBinding, ...], ...]
    filters_at: tuple[tuple[CompiledFilter, ...], ...]
    canonical_perm: tuple[int, ...]

    @property
    def num_attrs(self) -> int:
        return self.query.num_attrs

    def canonical(self, prefix: tuple[int, ...]) -> tuple[int, ...]:
        """Re-permute a full prefix from order positions to attribute ids."""
        return tuple(prefix[i] for i in self.canonical_perm)

    def passes(self, prefix: tuple[int, ...], length: int) -> bool:
        for f in self.filters_at[length]:
            if not f.holds(prefix):
                return False
        return True


def compile_plan(
    q: Query, provider: ViewProvider, filters: tuple[Filter, ...] = ()
) -> QueryPlan:
    validate_query(q)
    m = q.num_attrs
    slot_of = {a: i for i, a in enumerate(q.order)}
    bindings = []
    for j in range(m):
        attr = q.order[j]
        level = []
        for pos, schema in enumerate(q.schemas):
            if attr not in schema.attrs:
                continue
            in_schema = set(schema.attrs)
            bound = [b for b in q.order[:j] if b in in_schema]
            key_positions = tuple(schema.attrs.index(b) for b in bound)
            view = provider(pos, schema.base, key_positions, schema.attrs.index(attr))
            level.append(LevelBinding(pos, tuple(slot_of[b] for b in bound), view))
        bindings.append(tuple(level))

    filters_at: list[list[CompiledFilter]] = [[] for _ in range(m + 1)]
    for f in filters:
        ls, rs = slot_of[f.left], slot_of[f.right]
        filters_at[max(ls, rs) + 1].append(
            CompiledFilter(ls, rs, _FILTER_FNS[f.op])
        )

    return QueryPlan(
        query=q,
        bindings=tuple(bindings),
        filters_at=tuple(tuple(fs) for fs in filters_at),
        canonical_perm=tuple(slot_of[a] for a in range(m)),
    )


def static_provider(catalog) -> ViewProvider:
    """Views over an IndexCatalog; atoms sharing a signature share the index."""

    def provide(rel_pos, base, key_positions, ext_position):
        return catalog.index_for(base, key_positions, ext_position)

    return provide


def co_bound_seed_pairs(q: Query, catalog) -> list[tuple[int, int]] | None:
    """Length-two prefixes read straight from a relation binding the first two
    order attributes, or None when no atom covers exactly that pair."""
    first_two = {q.order[0], q.order[1]} if q.num_attrs >= 2 else None
    atoms = [s for s in q.schemas if first_two is not None and set(s.attrs) == first_two]
    if not atoms:
        return None

    def pairs(schema):
        i0 = schema.attrs.index(q.order[0])
        i1 = schema.attrs.index(q.order[1])
        return {(t[i0], t[i1]) for t in catalog.rows[schema.base]}

    seeds = pairs(atoms[0])
    for schema in atoms[1:]:
        seeds &= pairs(schema)
    return sorted(seeds)
