"""Skew-resilient variant of the distributed join.

The plain engine ships candidates to the data: a prefix whose key is popular
lands every message on that key's owner. Here the data is sharded three ways
per atom signature (counts by key, rank lookups by (key, rank), memberships
by (key, value)), so one hot key spreads across workers, and tasks move as
rank ranges instead of materialized candidates:

  select: each worker takes up to batch_per_worker extension ranks from its
    queued (prefix, atom, start, end) slices;
  resolve: rank lookups are deduplicated per worker, asked of the rank shard
    owner, and answered back, two rounds;
  intersect: membership checks are deduplicated per worker and asked of the
    (key, value) shard owner, two rounds per constraining atom, with failed
    candidates dropped before the next hop;
  count: extension counts for the next attribute are deduplicated per worker
    and asked of the key shard owner, two rounds per atom;
  balance: each worker splits its new tasks into near-equal work shares,
    at most one split slice per receiver, dealt round-robin starting at the
    next worker id, one round.

A level is scheduled in full mode only when every worker holds at least a
full batch of work there, so full-round traffic stays proportional to the
per-worker batch size regardless of key skew. Per-level task inventory is
asserted to stay within four cluster batches; when a level's inventory
nears that cap it is drained before any shallower level may pour more
slices into it, which keeps the cap valid even for batch sizes smaller
than the worker count.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .extindex import (
    CountIndex,
    ExtResolverIndex,
    IndexCatalog,
    MembershipIndex,
    build_skew_triple,
    skew_indexed_per_worker,
)
from .dataflow import RunResult, edge_seeding_applicable
from .plan import QueryPlan, co_bound_seed_pairs, compile_plan, static_provider
from .relations import Filter, Query
from .runtime import Runtime, WorkerConfig


@dataclass(frozen=True)
class SkewBinding:
    """One atom constraining one order position, over sharded views."""

    rel_pos: int
    slots: tuple[int, ...]
    counts: CountIndex
    resolver: ExtResolverIndex
    members: MembershipIndex

    def key_of(self, prefix: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(prefix[i] for i in self.slots)


def skew_bindings(q: Query, catalog: IndexCatalog):
    """Per-level sharded bindings plus the distinct backing indexes."""
    slot_of = {a: i for i, a in enumerate(q.order)}
    triples: dict = {}
    levels = []
    for j in range(q.num_attrs):
        attr = q.order[j]
        level = []
        for pos, schema in enumerate(q.schemas):
            if attr not in schema.attrs:
                continue
            in_schema = set(schema.attrs)
            bound = [b for b in q.order[:j] if b in in_schema]
            sig = (
                schema.base,
                tuple(schema.attrs.index(b) for b in bound),
                schema.attrs.index(attr),
            )
            if sig not in triples:
                triples[sig] = build_skew_triple(catalog.index_for(*sig))
            cnt, res, mem = triples[sig]
            level.append(
                SkewBinding(pos, tuple(slot_of[b] for b in bound), cnt, res, mem)
            )
        levels.append(tuple(level))
    backing = [catalog.index_for(*sig) for sig in triples]
    return levels, backing


class BalancedJoin:
    """One evaluation over sharded indexes with work balancing."""

    def __init__(
        self,
        plan: QueryPlan,
        skew_levels,
        runtime: Runtime,
        seed_level: int,
        seed_streams: list[list[tuple[tuple[int, ...], int]]],
        seed_checks: tuple = (),
    ):
        self.plan = plan
        self.skew = skew_levels
        self.rt = runtime
        self.cfg = runtime.config
        self.w = runtime.workers
        self.seed = self.cfg.seed
        self.bp = self.cfg.batch_per_worker
        self.b = self.cfg.batch_total
        m = plan.num_attrs
        self.m = m
        self.seed_level = seed_level
        self.seed_checks = seed_checks
        self.reservoir = [deque(s) for s in seed_streams]
        self.tasks: list[list[deque]] = [[deque() for _ in range(self.w)] for _ in range(m)]
        self.level_work = [[0] * self.w for _ in range(m)]
        self.level_count = [0] * m
        self.queued = [0] * self.w
        self.by_rel = [{b.rel_pos: b for b in level} for level in skew_levels]
        self.outputs: list[tuple[tuple[int, ...], int]] = []
        self.inflight_hwm = 0
        self.stored_hwm = [0] * m
        # one pour adds at most B + w(w-1) slices (each sender leaves at most
        # one split per receiver), so levels at or below this keep the 4B cap
        self.room = 3 * self.b - self.w * (self.w - 1)

    def _barrier(self) -> list[list]:
        inboxes = self.rt.barrier(self.queued)
        inflight = sum(len(box) for box in inboxes)
        if inflight > self.inflight_hwm:
            self.inflight_hwm = inflight
        if self.cfg.check_invariants:
            bound = 2 * self.b + self.w * self.w
            assert inflight <= bound, f"in-flight {inflight} exceeds {bound}"
        return inboxes

    def _store(self, j: int, worker: int, task: list) -> None:
        self.tasks[j][worker].append(task)
        self.level_work[j][worker] += task[4] - task[3]
        self.level_count[j] += 1
        self.queued[worker] += 1
        if self.level_count[j] > self.stored_hwm[j]:
            self.stored_hwm[j] = self.level_count[j]
        if self.cfg.check_invariants:
            assert self.level_count[j] <= 4 * self.b, (
                f"level {j} stores {self.level_count[j]} tasks, bound {4 * self.b}"
            )

    # --- scheduling ---

    def _pick(self):
        bp = self.bp
        for j in range(self.m - 1, -1, -1):
            if self.level_count[j] > max(self.room, 0):
                return ("batch", j, False)
        for j in range(self.m - 1, -1, -1):
            if all(x >= bp for x in self.level_work[j]):
                return ("batch", j, True)
            if j == self.seed_level and all(len(r) >= bp for r in self.reservoir):
                return ("inject", j, True)
        for j in range(self.m - 1, -1, -1):
            if any(self.level_work[j]):
                return ("batch", j, False)
        if any(self.reservoir):
            return ("inject", self.seed_level, False)
        return None

    def run(self) -> None:
        while True:
            action = self._pick()
            if action is None:
                break
            kind, j, full = action
            self.rt.set_mode(full)
            if kind == "inject":
                self._inject()
            else:
                self._run_batch(j)
        self.rt.finish()

    # --- seed injection ---

    def _inject(self) -> None:
        plan, rt = self.plan, self.rt
        items: list[list[tuple[tuple[int, ...], int]]] = [[] for _ in range(self.w)]
        for k in range(self.w):
            r = self.reservoir[k]
            took = 0
            while r and took < self.bp:
                p, wgt = r.popleft()
                took += 1
                if all(plan.passes(p, L) for L in range(1, self.seed_level + 1)):
                    items[k].append((p, wgt))
        for slot, binding in self.seed_checks:
            for k in range(self.w):
                need = {}
                for p, wgt in items[k]:
                    need.setdefault((binding.key_of(p), p[slot]), None)
                for key, e in need:
                    rt.send(
                        binding.members.owner(key, e, self.w, self.seed), (k, key, e)
                    )
            inboxes = self._barrier()
            for k2 in range(self.w):
                for k, key, e in inboxes[k2]:
                    rt.add_work(k2, 1, "seed_check")
                    rt.send(k, (key, e, binding.members.contains(key, e)))
            inboxes = self._barrier()
            for k in range(self.w):
                verdicts = {(key, e): ok for key, e, ok in inboxes[k]}
                items[k] = [
                    (p, wgt)
                    for p, wgt in items[k]
                    if verdicts[(binding.key_of(p), p[slot])]
                ]
        self._count_and_balance(self.seed_level, items)

    # --- one scheduled batch ---

    def _run_batch(self, j: int) -> None:
        units = self._select(j)
        candidates = self._resolve(j, units)
        survivors = self._intersect(j, candidates)
        if j + 1 == self.m:
            canon = self.plan.canonical
            for k in range(self.w):
                self.outputs.extend((canon(p2), wgt) for p2, wgt in survivors[k])
        else:
            self._count_and_balance(j + 1, survivors)

    def _select(self, j: int) -> list[list]:
        units: list[list] = [[] for _ in range(self.w)]
        for k in range(self.w):
            budget = self.bp
            dq = self.tasks[j][k]
            while dq and budget > 0:
                task = dq[0]
                p, wgt, rel, start, end = task
                take = min(budget, end - start)
                units[k].extend((p, wgt, rel, r) for r in range(start, start + take))
                task[3] = start + take
                self.level_work[j][k] -= take
                budget -= take
                if task[3] == end:
                    dq.popleft()
                    self.level_count[j] -= 1
                    self.queued[k] -= 1
        return units

    def _resolve(self, j: int, units: list[list]) -> list[list]:
        rt = self.rt
        by_rel = self.by_rel[j]
        for k in range(self.w):
            need = {}
            for p, wgt, rel, rank in units[k]:
                need.setdefault((rel, by_rel[rel].key_of(p), rank), None)
            for rel, key, rank in need:
                dest = by_rel[rel].resolver.owner(key, rank + 1, self.w, self.seed)
                rt.send(dest, (k, rel, key, rank))
        inboxes = self._barrier()
        for k2 in range(self.w):
            for k, rel, key, rank in inboxes[k2]:
                rt.add_work(k2, 1, "resolve")
                rt.send(k, (rel, key, rank, by_rel[rel].resolver.resolve(key, rank + 1)))
        inboxes = self._barrier()
        filters = self.plan.filters_at[j + 1]
        candidates: list[list] = [[] for _ in range(self.w)]
        for k in range(self.w):
            answers = {(rel, key, rank): e for rel, key, rank, e in inboxes[k]}
            for p, wgt, rel, rank in units[k]:
                e = answers[(rel, by_rel[rel].key_of(p), rank)]
                if filters and not self.plan.passes(p + (e,), j + 1):
                    continue
                candidates[k].append((p, e, wgt, rel))
        return candidates

    def _intersect(self, j: int, candidates: list[list]) -> list[list]:
        rt = self.rt
        alive = candidates
        for binding in self.skew[j]:
            for k in range(self.w):
                need = {}
                for p, e, wgt, src in alive[k]:
                    if binding.rel_pos != src:
                        need.setdefault((binding.key_of(p), e), None)
                for key, e in need:
                    rt.send(
                        binding.members.owner(key, e, self.w, self.seed), (k, key, e)
                    )
            inboxes = self._barrier()
            for k2 in range(self.w):
                for k, key, e in inboxes[k2]:
                    rt.add_work(k2, 1, "membership")
                    rt.send(k, (key, e, binding.members.contains(key, e)))
            inboxes = self._barrier()
            nxt = []
            for k in range(self.w):
                verdicts = {(key, e): ok for key, e, ok in inboxes[k]}
                nxt.append(
                    [
                        c
                        for c in alive[k]
                        if c[3] == binding.rel_pos
                        or verdicts[(binding.key_of(c[0]), c[1])]
                    ]
                )
            alive = nxt
        return [[(p + (e,), wgt) for p, e, wgt, _ in alive[k]] for k in range(self.w)]

    def _count_and_balance(self, j_next: int, items: list[list]) -> None:
        rt = self.rt
        state = [[(p, wgt, None, -1) for p, wgt in items[k]] for k in range(self.w)]
        for binding in self.skew[j_next]:
            for k in range(self.w):
                need = {}
                for p, wgt, min_c, min_rel in state[k]:
                    need.setdefault(binding.key_of(p), None)
                for key in need:
                    rt.send(binding.counts.owner(key, self.w, self.seed), (k, key))
            inboxes = self._barrier()
            for k2 in range(self.w):
                for k, key in inboxes[k2]:
                    rt.add_work(k2, 1, "count")
                    rt.send(k, (key, binding.counts.count(key)))
            inboxes = self._barrier()
            for k in range(self.w):
                counts = {key: c for key, c in inboxes[k]}
                updated = []
                for p, wgt, min_c, min_rel in state[k]:
                    c = counts[binding.key_of(p)]
                    if min_c is None or c < min_c:
                        updated.append((p, wgt, c, binding.rel_pos))
                    else:
                        updated.append((p, wgt, min_c, min_rel))
                state[k] = updated
        tasks = [
            [(p, wgt, rel, c) for p, wgt, c, rel in state[k] if c]
            for k in range(self.w)
        ]
        self._balance(j_next, tasks)

    def _balance(self, j_next: int, tasks: list[list]) -> None:
        """Split each worker's new tasks into near-equal work shares, dealt
        round-robin to the other workers first; one round."""
        rt = self.rt
        for k in range(self.w):
            total = sum(c for _, _, _, c in tasks[k])
            if total == 0:
                continue
            q, r = divmod(total, self.w)
            shares = deque([q + 1] * r + [q] * (self.w - r))
            targets = deque((k + 1 + i) % self.w for i in range(self.w))
            room = shares.popleft()
            dest = targets.popleft()
            for p, wgt, rel, c in tasks[k]:
                start = 0
                while start < c:
                    while room == 0:
                        room = shares.popleft()
                        dest = targets.popleft()
                    take = min(room, c - start)
                    rt.send(dest, (p, wgt, rel, start, start + take))
                    room -= take
                    start += take
        inboxes = self._barrier()
        for k in range(self.w):
            for p, wgt, rel, start, end in inboxes[k]:
                self._store(j_next, k, [p, wgt, rel, start, end])


def run_static_balanced(
    q: Query,
    relations: Mapping[str, Iterable[tuple[int, ...]]] | None = None,
    config: WorkerConfig = WorkerConfig(),
    *,
    catalog: IndexCatalog | None = None,
    filters: tuple[Filter, ...] = (),
    seed_mode: str = "auto",
) -> RunResult:
    """Evaluate a query on the simulated workers with skew-resilient sharding."""
    if catalog is None:
        if relations is None:
            raise ValueError("need relations or a prebuilt catalog")
        catalog = IndexCatalog(relations)
    plan = compile_plan(q, static_provider(catalog), filters)
    levels, backing = skew_bindings(q, catalog)

    if seed_mode not in ("auto", "edges", "empty"):
        raise ValueError(f"unknown seed_mode {seed_mode!r}")
    use_edges = seed_mode != "empty" and edge_seeding_applicable(q)
    if seed_mode == "edges" and not use_edges:
        raise ValueError("edge seeding is not sound for this query shape")

    w = config.workers
    if use_edges:
        seed_level = 2
        pairs = co_bound_seed_pairs(q, catalog)
        streams = [[(p, 1) for p in pairs[k::w]] for k in range(w)]
    else:
        seed_level = 0
        streams = [[] for _ in range(w)]
        streams[0].append(((), 1))

    rt = Runtime(config, skew_indexed_per_worker(backing, w, config.seed))
    engine = BalancedJoin(plan, levels, rt, seed_level, streams)
    engine.run()
    return RunResult(
        outputs=engine.outputs,
        metrics=rt.report(),
        runtime=rt,
        inflight_hwm=engine.inflight_hwm,
        stored_hwm=list(engine.stored_hwm),
    )
