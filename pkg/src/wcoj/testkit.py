"""Reference evaluators and input generators used to cross-check the engines.

Everything here favors obviousness over speed. The join oracle walks atoms in
the order the query lists them, scanning whole relations; it never touches the
engines' extension indexes, orders, or count minimization, so agreement with
it is meaningful evidence. A guard refuses inputs too large for brute force.
"""

from __future__ import annotations

import random
from collections import Counter
from typing import Iterable, Mapping

from .errors import ArityMismatch, ScaleGuard
from .relations import Filter, Query, RelationSchema, SignedUpdate, validate_query

MAX_ORACLE_TABLE = 20_000
MAX_ORACLE_STEPS = 30_000_000


def oracle_join(
    q: Query,
    relations: Mapping[str, Iterable[tuple[int, ...]]],
    filters: tuple[Filter, ...] = (),
    *,
    max_steps: int = MAX_ORACLE_STEPS,
) -> Counter:
    """Brute-force join: left-deep scans in written atom order, set semantics.

    Returns a Counter over full tuples in attribute-id order. Filters are
    applied as soon as both of their attributes are bound, which only prunes
    and cannot change the result.
    """
    validate_query(q)
    tables: dict[str, list[tuple[int, ...]]] = {}
    sets: dict[str, set[tuple[int, ...]]] = {}
    for schema in q.schemas:
        if schema.base not in tables:
            rows = sorted(set(map(tuple, relations[schema.base])))
            if len(rows) > MAX_ORACLE_TABLE:
                raise ScaleGuard(f"{schema.base!r} has {len(rows)} tuples")
            tables[schema.base] = rows
            sets[schema.base] = set(rows)
        for t in tables[schema.base]:
            if len(t) != schema.arity:
                raise ArityMismatch(
                    f"tuple of arity {len(t)} in {schema.base!r}, atom expects {schema.arity}"
                )

    m = q.num_attrs
    partial: list[tuple] = [(None,) * m]
    bound: set[int] = set()
    remaining_filters = list(filters)
    steps = 0

    for schema in q.schemas:
        attrs = schema.attrs
        table = tables[schema.base]
        members = sets[schema.base]
        grown: list[tuple] = []
        if all(a in bound for a in attrs):
            for row in partial:
                steps += 1
                if tuple(row[a] for a in attrs) in members:
                    grown.append(row)
        else:
            for row in partial:
                for t in table:
                    steps += 1
                    if steps > max_steps:
                        raise ScaleGuard(f"exceeded {max_steps} scan steps")
                    out = list(row)
                    for a, v in zip(attrs, t):
                        if out[a] is None:
                            out[a] = v
                        elif out[a] != v:
                            break
                    else:
                        grown.append(tuple(out))
        bound.update(attrs)
        partial = grown
        still = []
        for f in remaining_filters:
            if f.left in bound and f.right in bound:
                partial = [r for r in partial if f.holds(r[f.left], r[f.right])]
            else:
                still.append(f)
        remaining_filters = still

    return Counter(partial)


def oracle_diff(
    q: Query,
    before: Mapping[str, Iterable[tuple[int, ...]]],
    after: Mapping[str, Iterable[tuple[int, ...]]],
    filters: tuple[Filter, ...] = (),
) -> dict[tuple[int, ...], int]:
    """Signed difference oracle_join(after) - oracle_join(before), zeros dropped."""
    delta = Counter(oracle_join(q, after, filters))
    delta.subtract(oracle_join(q, before, filters))
    return {t: w for t, w in sorted(delta.items()) if w != 0}


# --- query shapes used across the test suite ---


def _edges(pairs) -> tuple[RelationSchema, ...]:
    return tuple(RelationSchema("e", p) for p in pairs)


def triangle_query() -> Query:
    return Query(_edges([(0, 1), (0, 2), (1, 2)]), 3)


def cyclic_triangle_query() -> Query:
    """Directed 3-cycle form; each atom feeds the next attribute."""
    return Query(_edges([(0, 1), (1, 2), (2, 0)]), 3)


def diamond_query() -> Query:
    return Query(_edges([(0, 1), (1, 2), (3, 0), (3, 2)]), 4)


def four_clique_query() -> Query:
    return Query(_edges([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]), 4)


def five_clique_query() -> Query:
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    return Query(_edges(pairs), 5)


def house_query() -> Query:
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (1, 4), (2, 4)]
    return Query(_edges(pairs), 5)


# --- graph generators ---


def erdos_renyi(nv: int, p: float, seed: int) -> set[tuple[int, int]]:
    """Directed G(nv, p) without self-loops; one RNG draw per ordered pair."""
    rng = random.Random(seed)
    out = set()
    for u in range(nv):
        for v in range(nv):
            if u != v and rng.random() < p:
                out.add((u, v))
    return out


def symmetrize(edges: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    out = set()
    for u, v in edges:
        out.add((u, v))
        out.add((v, u))
    return out


def star(spokes: int, back_edges: bool = True) -> set[tuple[int, int]]:
    """Hub vertex 0 pointing at 1..spokes, optionally with reverse edges."""
    out = {(0, s) for s in range(1, spokes + 1)}
    if back_edges:
        out |= {(s, 0) for s in range(1, spokes + 1)}
    return out


def cycle_graph(k: int) -> set[tuple[int, int]]:
    return {(i, (i + 1) % k) for i in range(k)}


def golden_graph() -> set[tuple[int, int]]:
    """Small fixed graph whose only triangles are the rotations of (1, 6, 7)."""
    return {
        (1, 6), (6, 7), (7, 1),
        (6, 8), (6, 9), (6, 10), (6, 11),
        (2, 8), (3, 9), (4, 10), (5, 11),
    }


# --- update stream generator (keeps edge weights in {0, 1}) ---


def random_update_stream(
    nv: int,
    batches: int,
    ops_per_batch: int,
    seed: int,
    *,
    p_start: float = 0.15,
    start_time: int = 0,
) -> tuple[set[tuple[int, int]], list[list[SignedUpdate]]]:
    """An initial graph plus batches of mixed inserts and deletes.

    Inserts only add absent edges and deletes only remove present ones, so the
    accumulated graph is always a plain set.
    """
    rng = random.Random(seed)
    present = erdos_renyi(nv, p_start, seed * 7919 + 13)
    initial = set(present)
    out: list[list[SignedUpdate]] = []
    for b in range(batches):
        t = start_time + b
        batch: list[SignedUpdate] = []
        touched: set[tuple[int, int]] = set()
        for _ in range(ops_per_batch):
            if present - touched and rng.random() < 0.4:
                edge = rng.choice(sorted(present - touched))
                present.discard(edge)
                batch.append(SignedUpdate(edge, t, -1))
                touched.add(edge)
            else:
                for _ in range(40):
                    u = rng.randrange(nv)
                    v = rng.randrange(nv)
                    if u != v and (u, v) not in present and (u, v) not in touched:
                        present.add((u, v))
                        batch.append(SignedUpdate((u, v), t, +1))
                        touched.add((u, v))
                        break
        out.append(batch)
    return initial, out


def apply_updates(
    edges: set[tuple[int, int]], batch: Iterable[SignedUpdate]
) -> set[tuple[int, int]]:
    """Fold a batch into an edge set, asserting weights stay in {0, 1}."""
    out = set(edges)
    for upd in batch:
        if upd.weight > 0:
            out.add(upd.values)
        else:
            out.discard(upd.values)
    return out
