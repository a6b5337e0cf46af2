"""Conjunctive query model: relation atoms, attribute orders, signed updates.

Attributes are dense integer ids 0..m-1. Values are opaque 64-bit ints; the
engines never do arithmetic on them, only hashing and comparison. A query is a
list of atoms over named base relations; the same base name may appear in many
atoms and they all share one physical relation.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field

from .errors import ArityMismatch, BadOrder, DanglingAttribute

_FILTER_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "!=": operator.ne,
}


@dataclass(frozen=True)
class RelationSchema:
    """One atom: a base relation name and the attribute ids it binds, in column order."""

    base: str
    attrs: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.attrs)


@dataclass(frozen=True)
class Filter:
    """Inequality constraint between two attributes, e.g. Filter(0, "<", 1)."""

    left: int
    op: str
    right: int

    def __post_init__(self):
        if self.op not in _FILTER_OPS:
            raise ArityMismatch(f"unknown filter operator {self.op!r}")

    def holds(self, left_value: int, right_value: int) -> bool:
        return _FILTER_OPS[self.op](left_value, right_value)


@dataclass(frozen=True)
class Query:
    """A full conjunctive query over num_attrs attributes plus a global order.

    The order is the sequence in which attributes are bound during evaluation;
    it defaults to 0..m-1 as written.
    """

    schemas: tuple[RelationSchema, ...]
    num_attrs: int
    order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.order:
            object.__setattr__(self, "order", tuple(range(self.num_attrs)))

    @property
    def num_relations(self) -> int:
        return len(self.schemas)

    def with_order(self, order: tuple[int, ...]) -> "Query":
        q = Query(self.schemas, self.num_attrs, tuple(order))
        validate_query(q)
        return q


@dataclass(frozen=True)
class SignedUpdate:
    """One change to a relation: a tuple, the time it applies, and a +/- weight."""

    values: tuple[int, ...]
    time: int
    weight: int


def validate_query(q: Query) -> None:
    """Check schema shape, attribute coverage, and that order is a permutation."""
    seen = set()
    for schema in q.schemas:
        if len(set(schema.attrs)) != len(schema.attrs):
            raise ArityMismatch(f"repeated attribute in atom over {schema.base!r}")
        for a in schema.attrs:
            if not 0 <= a < q.num_attrs:
                raise DanglingAttribute(f"attribute {a} outside 0..{q.num_attrs - 1}")
            seen.add(a)
    missing = set(range(q.num_attrs)) - seen
    if missing:
        raise DanglingAttribute(f"attributes {sorted(missing)} appear in no atom")
    if sorted(q.order) != list(range(q.num_attrs)):
        raise BadOrder(f"order {q.order} is not a permutation of 0..{q.num_attrs - 1}")


def binding_attributes(q: Query, rel_pos: int, j: int) -> tuple[int, ...]:
    """Attributes of atom rel_pos among the first j order positions, in order sequence."""
    schema = set(q.schemas[rel_pos].attrs)
    return tuple(a for a in q.order[:j] if a in schema)


def relations_binding(q: Query, j: int) -> tuple[int, ...]:
    """Atom positions whose schema contains the attribute at order position j."""
    a = q.order[j]
    return tuple(i for i, s in enumerate(q.schemas) if a in s.attrs)
