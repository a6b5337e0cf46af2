"""Evaluation shortcuts for undirected inputs.

Symmetry breaking renumbers vertices so ids ascend with (degree, old id) and
keeps each undirected edge once, pointed low to high; a pattern with k
interchangeable vertices then matches once instead of k! times, and ascending
id filters make that explicit. The triangle relation materializes all
constrained triangles of a broken graph as ternary tuples for rewrites that
join triangles instead of edges. Factorized evaluation stops one level short
and emits the last two attributes as independent candidate lists whose
product is the flat result.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import NotFactorizable
from .extindex import IndexCatalog
from .generic_join import JoinStats, extend_level
from .plan import compile_plan, static_provider
from .relations import Filter, Query


def symmetry_break(
    edges: Iterable[tuple[int, int]],
) -> tuple[list[tuple[int, int]], dict[int, int]]:
    """Renumber by (degree, old id) and keep one low-to-high copy per edge.

    The new ids are the original id set reassigned, so the sparsest vertex
    gets the smallest id. Returns the edge list and the renumbering map.
    """
    neighbors: dict[int, set[int]] = defaultdict(set)
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    ranked = sorted(neighbors, key=lambda v: (len(neighbors[v]), v))
    ids = sorted(neighbors)
    renum = {old: ids[i] for i, old in enumerate(ranked)}
    out = set()
    for u, v in edges:
        a, b = renum[u], renum[v]
        out.add((a, b) if a <= b else (b, a))
    return sorted(out), renum


def build_triangle_relation(
    edges: Iterable[tuple[int, int]],
) -> list[tuple[int, int, int]]:
    """All triangles a < b < c of a symmetry-broken graph, sorted."""
    up: dict[int, set[int]] = defaultdict(set)
    for u, v in edges:
        if u < v:
            up[u].add(v)
        elif v < u:
            up[v].add(u)
    tris = []
    for u in sorted(up):
        for v in sorted(up[u]):
            for w in sorted(up[u] & up.get(v, set())):
                tris.append((u, v, w))
    return tris


@dataclass
class FactorizedResult:
    """Join results with the last two order attributes left unexpanded.

    records hold (prefix, A, B) in order-position space; every combination
    of one value from A and one from B completes the prefix.
    """

    order: tuple[int, ...]
    canonical_perm: tuple[int, ...]
    records: list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]]

    @property
    def flat_count(self) -> int:
        return sum(len(a) * len(b) for _, a, b in self.records)

    def flatten(self) -> Iterator[tuple[int, ...]]:
        perm = self.canonical_perm
        for p, avals, bvals in self.records:
            for a in avals:
                full = p + (a,)
                for b in bvals:
                    t = full + (b,)
                    yield tuple(t[i] for i in perm)


def factorizable_order(
    q: Query, filters: tuple[Filter, ...] = ()
) -> tuple[int, ...]:
    """Pick an attribute order usable by run_factorized.

    Scans attribute pairs in ascending order for the first pair linked by no
    atom and no filter, puts the remaining attributes first (ascending), and
    ends with that pair. Raises NotFactorizable when every pair is linked.
    """
    m = q.num_attrs
    linked = {frozenset((f.left, f.right)) for f in filters}
    for schema in q.schemas:
        for i, x in enumerate(schema.attrs):
            for y in schema.attrs[i + 1:]:
                linked.add(frozenset((x, y)))
    for x in range(m):
        for y in range(x + 1, m):
            if frozenset((x, y)) not in linked:
                rest = tuple(a for a in range(m) if a != x and a != y)
                return rest + (x, y)
    raise NotFactorizable("every attribute pair shares an atom or a filter")


def run_factorized(
    q: Query,
    relations: Mapping[str, Iterable[tuple[int, ...]]] | None = None,
    *,
    filters: tuple[Filter, ...] = (),
    catalog: IndexCatalog | None = None,
    stats: JoinStats | None = None,
) -> FactorizedResult:
    """Evaluate with the last two order attributes factored apart.

    Sound only when no atom and no filter links those two attributes; their
    candidate sets are then independent given the shorter prefix.
    """
    m = q.num_attrs
    if m < 2:
        raise NotFactorizable("factorizing needs at least two attributes")
    second, last = q.order[m - 2], q.order[m - 1]
    for schema in q.schemas:
        if second in schema.attrs and last in schema.attrs:
            raise NotFactorizable(
                f"attributes a{second + 1} and a{last + 1} share an atom over {schema.base!r}"
            )
    for f in filters:
        if {f.left, f.right} == {second, last}:
            raise NotFactorizable(
                f"a filter links attributes a{second + 1} and a{last + 1}"
            )

    if catalog is None:
        if relations is None:
            raise ValueError("need relations or a prebuilt catalog")
        catalog = IndexCatalog(relations)
    plan = compile_plan(q, static_provider(catalog), filters)

    prefixes: list[tuple[int, ...]] = [()]
    for j in range(m - 2):
        prefixes = extend_level(plan, j, prefixes, stats)
        if not prefixes:
            break

    records = []
    for p in prefixes:
        avals = tuple(t[-1] for t in extend_level(plan, m - 2, [p], stats))
        if not avals:
            continue
        bvals = _independent_extensions(plan, m - 1, p, stats)
        if not bvals:
            continue
        records.append((p, avals, bvals))
    return FactorizedResult(
        order=q.order, canonical_perm=plan.canonical_perm, records=records
    )


def _independent_extensions(plan, j, prefix, stats):
    """Extensions for order position j computed from a prefix two short;
    valid because no binding at j reaches the skipped slot."""
    keyed = [(b, b.key_of(prefix)) for b in plan.bindings[j]]
    if stats is not None:
        stats.count_probes += len(keyed)
    best, best_key = None, None
    best_count = -1
    for b, key in keyed:
        c = b.view.count(key)
        if best is None or c < best_count:
            best, best_key, best_count = b, key, c
    if best_count == 0:
        return ()
    candidates = best.view.enumerate(best_key, 0, best_count)
    if stats is not None:
        stats.proposals += len(candidates)
    out = []
    pad = prefix + (0,)
    for e in candidates:
        ok = True
        for b, key in keyed:
            if b is best:
                continue
            if stats is not None:
                stats.membership_probes += 1
            if not b.view.contains(key, e):
                ok = False
                break
        if ok and plan.passes(pad + (e,), j + 1):
            out.append(e)
    return tuple(out)
