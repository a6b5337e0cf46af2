"""Datalog-style query text.

    tri(a1,a2,a3) := e(a1,a2), e(a2,a3), e(a3,a1), a1 < a2

The head names the output attributes in order; body atoms bind them through
relations, and comparison atoms become filter predicates. A variable repeated
inside one atom (a self loop like e(x,x)) is desugared to a derived relation
holding the rows where those columns agree, projected to the distinct
columns, so downstream schemas never repeat an attribute.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import QuerySyntaxError, UnknownRelation
from .relations import Filter, Query, RelationSchema, validate_query

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<assign>:=)"
    r"|(?P<op><=|>=|!=|<|>)"
    r"|(?P<punct>[(),])"
)

_COMPARATORS = ("<", "<=", ">", ">=", "!=")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


@dataclass(frozen=True)
class ParsedQuery:
    """A query plus everything needed to evaluate it: filters and the
    derived relations that self-loop atoms project out of their base."""

    query: Query
    filters: tuple[Filter, ...]
    head: str
    head_vars: tuple[str, ...]
    derived: dict[str, tuple[str, tuple[int, ...]]] = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str, arities: Mapping[str, int] | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.arities = arities

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str, value: str | None = None):
        k, v, pos = self.toks[self.i]
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise QuerySyntaxError(f"expected {want!r}, found {v or 'end of input'!r}", pos)
        self.i += 1
        return v, pos

    def varlist(self) -> list[tuple[str, int]]:
        self.take("punct", "(")
        out = [self.take("name")]
        while self.peek()[:2] == ("punct", ","):
            self.take("punct", ",")
            out.append(self.take("name"))
        self.take("punct", ")")
        return out

    def parse(self) -> ParsedQuery:
        head, _ = self.take("name")
        head_vars = self.varlist()
        slot: dict[str, int] = {}
        for v, pos in head_vars:
            if v in slot:
                raise QuerySyntaxError(f"duplicate head variable {v!r}", pos)
            slot[v] = len(slot)
        self.take("assign")

        schemas: list[RelationSchema] = []
        filters: list[Filter] = []
        derived: dict[str, tuple[str, tuple[int, ...]]] = {}
        while True:
            self._term(slot, schemas, filters, derived)
            if self.peek()[0] == "end":
                break
            self.take("punct", ",")
        q = Query(schemas=tuple(schemas), num_attrs=len(slot))
        validate_query(q)
        return ParsedQuery(
            query=q,
            filters=tuple(filters),
            head=head,
            head_vars=tuple(v for v, _ in head_vars),
            derived=derived,
        )

    def _term(self, slot, schemas, filters, derived) -> None:
        name, npos = self.take("name")
        kind, val, pos = self.peek()
        if kind == "op":
            self.take("op")
            right, rpos = self.take("name")
            for v, p in ((name, npos), (right, rpos)):
                if v not in slot:
                    raise QuerySyntaxError(f"unknown variable {v!r}", p)
            filters.append(Filter(slot[name], val, slot[right]))
            return
        if not (kind == "punct" and val == "("):
            raise QuerySyntaxError("expected '(' or a comparison operator", pos)
        args = self.varlist()
        if self.arities is not None:
            if name not in self.arities:
                raise UnknownRelation(f"no relation named {name!r}")
            if self.arities[name] != len(args):
                raise UnknownRelation(
                    f"{name!r} has arity {self.arities[name]}, atom uses {len(args)}"
                )
        for v, p in args:
            if v not in slot:
                raise QuerySyntaxError(f"unknown variable {v!r}", p)
        names = [v for v, _ in args]
        if len(set(names)) == len(names):
            schemas.append(RelationSchema(name, tuple(slot[v] for v in names)))
            return
        # repeated variable: derive the equality-filtered projection
        groups: list[int] = []
        firsts: list[str] = []
        for v in names:
            if v in firsts:
                groups.append(firsts.index(v))
            else:
                groups.append(len(firsts))
                firsts.append(v)
        dname = f"{name}[{','.join(map(str, groups))}]"
        derived[dname] = (name, tuple(groups))
        schemas.append(RelationSchema(dname, tuple(slot[v] for v in firsts)))


def parse_query(text: str, arities: Mapping[str, int] | None = None) -> ParsedQuery:
    """Parse query text; with an arity map, atoms must match loaded relations."""
    parser = _Parser(text, arities)
    parsed = parser.parse()
    return parsed


def materialize_derived(
    relations: Mapping[str, Iterable[tuple[int, ...]]],
    derived: Mapping[str, tuple[str, tuple[int, ...]]],
) -> dict[str, list[tuple[int, ...]]]:
    """Base relations plus the projections that self-loop atoms asked for."""
    out = {name: list(rows) for name, rows in relations.items()}
    for dname, (source, groups) in derived.items():
        if source not in out:
            raise UnknownRelation(f"no relation named {source!r}")
        width = max(groups) + 1
        rows = []
        for row in out[source]:
            vals: list[int | None] = [None] * width
            for col, g in enumerate(groups):
                if vals[g] is None:
                    vals[g] = row[col]
                elif vals[g] != row[col]:
                    vals = None
                    break
            if vals is not None:
                rows.append(tuple(vals))
        out[dname] = rows
    return out
