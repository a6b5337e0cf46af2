"""Incremental result maintenance through per-atom delta rules.

A batch of signed edge updates at time t changes the query result by the
signed union of n rules, one per atom: rule i joins the batch's net edge
changes (as seeds for atom i) against atoms before position i read at time t
and atoms after it read at time t-1. Each rule reorders the attributes so its
own atom's attributes come first; seeds enter the dataflow as ready-made
prefixes of that length, verified against the other already-bound atoms by
direct membership probes instead of recomputing the shorter prefixes.

Rules run one after another on a shared runtime, so one cost ledger covers
the whole batch. The store's frontier then advances past t.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .dataflow import DataflowJoin
from .mvindex import DynamicGraphStore
from .plan import compile_plan
from .relations import Filter, Query, SignedUpdate, validate_query
from .runtime import Runtime, WorkerConfig


@dataclass(frozen=True)
class DeltaRule:
    """Rule i: seeds stand in for atom i; earlier atoms read new, later old."""

    index: int
    query: Query

    @property
    def seed_arity(self) -> int:
        return self.query.schemas[self.index].arity


def derive(q: Query) -> list[DeltaRule]:
    """One rule per atom, ordering that atom's attributes first (in schema
    order) and the remaining attributes ascending."""
    validate_query(q)
    rules = []
    for i, schema in enumerate(q.schemas):
        rest = tuple(a for a in range(q.num_attrs) if a not in schema.attrs)
        rules.append(DeltaRule(i, q.with_order(schema.attrs + rest)))
    return rules


def _check_dynamic(q: Query) -> None:
    bases = {s.base for s in q.schemas}
    if len(bases) != 1 or any(s.arity != 2 for s in q.schemas):
        raise ValueError(
            "dynamic maintenance supports binary atoms over a single edge relation"
        )


def _rule_provider(store: DynamicGraphStore, i: int, t: int):
    def provide(rel_pos, base, key_positions, ext_position):
        at = t if rel_pos <= i else t - 1
        return store.view(key_positions, ext_position, at)

    return provide


def _set_delta(
    store: DynamicGraphStore, batch: Sequence[SignedUpdate], t: int
) -> list[tuple[tuple[int, int], int]]:
    """Net presence changes of the batch's edges: +1 appeared, -1 vanished."""
    touched: list[tuple[int, int]] = []
    seen = set()
    for u in batch:
        e = tuple(u.values)
        if e not in seen:
            seen.add(e)
            touched.append(e)
    seeds = []
    for a, b in touched:
        before = store.fwd.query_at((a,), t - 1).get(b, 0) > 0
        after = store.fwd.query_at((a,), t).get(b, 0) > 0
        if after and not before:
            seeds.append(((a, b), 1))
        elif before and not after:
            seeds.append(((a, b), -1))
    return seeds


@dataclass
class DeltaResult:
    changes: Counter
    metrics: dict
    runtime: Runtime

    @property
    def probes(self) -> Counter:
        kinds = self.runtime.probe_kinds
        return Counter(
            {
                k: kinds.get(k, 0)
                for k in ("count", "membership", "seed_check")
                if kinds.get(k, 0)
            }
        )


def run_delta_batch(
    q: Query,
    store: DynamicGraphStore,
    batch: Iterable[SignedUpdate],
    config: WorkerConfig = WorkerConfig(),
    *,
    filters: tuple[Filter, ...] = (),
    time: int | None = None,
) -> DeltaResult:
    """Ingest one batch, evaluate all delta rules, advance the frontier."""
    _check_dynamic(q)
    batch = list(batch)
    if time is None:
        if not batch:
            raise ValueError("an empty batch needs an explicit time")
        time = batch[0].time
    if any(u.time != time for u in batch):
        raise ValueError("a batch carries exactly one timestamp")

    store.ingest(batch)
    seeds = _set_delta(store, batch, time)

    w = config.workers
    total = store.fwd.total_entries() + store.rev.total_entries()
    indexed = [total // w + (1 if k < total % w else 0) for k in range(w)]
    rt = Runtime(config, indexed)

    acc: Counter = Counter()
    for rule in derive(q):
        plan = compile_plan(
            rule.query, _rule_provider(store, rule.index, time), filters
        )
        r_i = rule.seed_arity
        checks = tuple(
            (level, b)
            for level in range(r_i)
            for b in plan.bindings[level]
            if b.rel_pos != rule.index
        )
        streams = [seeds[k::w] for k in range(w)]
        engine = DataflowJoin(
            plan, rt, seed_level=r_i, seed_streams=streams, seed_checks=checks
        )
        engine.run()
        for tup, wgt in engine.outputs:
            acc[tup] += wgt

    store.advance(time + 1)
    changes = Counter({tup: wgt for tup, wgt in acc.items() if wgt != 0})
    return DeltaResult(changes=changes, metrics=rt.report(), runtime=rt)


@dataclass
class ReplayResult:
    deltas: list[Counter]
    accumulated: Counter
    probe_totals: Counter
    store: DynamicGraphStore


def run_delta_serial(
    q: Query,
    relations: Mapping[str, Iterable[tuple[int, ...]]] | None,
    batches: Sequence[Sequence[SignedUpdate]],
    config: WorkerConfig | None = None,
    *,
    filters: tuple[Filter, ...] = (),
) -> ReplayResult:
    """Replay an update stream batch by batch from an initial edge set,
    accumulating per-batch deltas and probe counts."""
    initial = list(relations["e"]) if relations and "e" in relations else []
    first = next((b[0].time for b in batches if b), 1)
    store = DynamicGraphStore(initial, load_time=first - 1)
    if config is None:
        config = WorkerConfig(workers=1, batch_per_worker=64)
    deltas: list[Counter] = []
    acc: Counter = Counter()
    probes: Counter = Counter()
    for batch in batches:
        if not batch:
            deltas.append(Counter())
            continue
        res = run_delta_batch(q, store, batch, config, filters=filters)
        deltas.append(res.changes)
        acc.update(res.changes)
        probes.update(res.probes)
    acc = Counter({tup: wgt for tup, wgt in acc.items() if wgt != 0})
    return ReplayResult(deltas=deltas, accumulated=acc, probe_totals=probes, store=store)
