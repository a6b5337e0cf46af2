"""Serial worst-case optimal multiway join.

Prefixes over the attribute order grow one position at a time. At each step
the candidate extensions come from the constraining atom with the fewest
extensions (ties to the lowest atom position), and every other constraining
atom filters by membership. Total probes stay within the worst-case output
bound of the query because no step can enumerate more than the smallest list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .extindex import IndexCatalog
from .plan import QueryPlan, compile_plan, static_provider
from .relations import Filter, Query


@dataclass
class JoinStats:
    """Unit-cost counters; one probe is one index consultation."""

    count_probes: int = 0
    membership_probes: int = 0
    proposals: int = 0

    @property
    def probes(self) -> int:
        return self.count_probes + self.membership_probes

    def merge(self, other: "JoinStats") -> None:
        self.count_probes += other.count_probes
        self.membership_probes += other.membership_probes
        self.proposals += other.proposals

    def as_dict(self) -> dict:
        return {
            "count": self.count_probes,
            "membership": self.membership_probes,
            "proposal": self.proposals,
        }


def extend_level(
    plan: QueryPlan,
    j: int,
    prefixes: Iterable[tuple[int, ...]],
    stats: JoinStats | None = None,
) -> list[tuple[int, ...]]:
    """Grow length-j prefixes by the attribute at order position j."""
    st = stats if stats is not None else JoinStats()
    bindings = plan.bindings[j]
    filters = plan.filters_at[j + 1]
    out: list[tuple[int, ...]] = []
    for p in prefixes:
        keyed = [(b, b.key_of(p)) for b in bindings]
        st.count_probes += len(keyed)
        best, best_key, best_count = None, None, None
        for b, key in keyed:
            c = b.view.count(key)
            if best_count is None or c < best_count:
                best, best_key, best_count = b, key, c
        if not best_count:
            continue
        candidates = best.view.enumerate(best_key, 0, best_count)
        st.proposals += len(candidates)
        for e in candidates:
            for b, key in keyed:
                if b is best:
                    continue
                st.membership_probes += 1
                if not b.view.contains(key, e):
                    break
            else:
                p2 = p + (e,)
                if not filters or plan.passes(p2, j + 1):
                    out.append(p2)
    return out


def run(
    q: Query,
    relations: Mapping[str, Iterable[tuple[int, ...]]] | None = None,
    *,
    catalog: IndexCatalog | None = None,
    filters: tuple[Filter, ...] = (),
    stats: JoinStats | None = None,
) -> list[tuple[int, ...]]:
    """Full evaluation; returns tuples in attribute-id order."""
    if catalog is None:
        if relations is None:
            raise ValueError("need relations or a prebuilt catalog")
        catalog = IndexCatalog(relations)
    plan = compile_plan(q, static_provider(catalog), filters)
    prefixes: list[tuple[int, ...]] = [()]
    for j in range(q.num_attrs):
        prefixes = extend_level(plan, j, prefixes, stats)
        if not prefixes:
            return []
    return [plan.canonical(p) for p in prefixes]
