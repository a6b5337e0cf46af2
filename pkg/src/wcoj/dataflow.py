"""Distributed multiway join as a batched dataflow over logical workers.

Prefixes wait in per-worker queues as proposal tasks (prefix, weight, source
atom, extension count, cursor). A scheduling step picks the deepest level
where some worker holds at least a batch of extension work and runs one batch:

  propose: each worker emits up to batch_per_worker candidate extensions from
    its queued tasks, resuming partially proposed tasks where they left off;
  intersect: candidates flow through one hop per constraining atom, routed by
    the atom's bound-attribute key, and drop on a failed membership probe;
  count: survivors flow through one hop per atom constraining the next
    attribute to learn their smallest extension count and its source atom;
  place: the resulting tasks land on the worker owning the source atom's key.

A barrier separates every hop, so in-flight data never exceeds one batch and
queued tasks per level never exceed two batches; both are asserted. Length-two
prefixes can be seeded straight from an edge relation instead of growing from
the empty prefix; seeds are metered into the dataflow at batch granularity.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .extindex import IndexCatalog
from .plan import QueryPlan, compile_plan, co_bound_seed_pairs, static_provider
from .relations import Filter, Query
from .runtime import Runtime, WorkerConfig


def edge_seeding_applicable(q: Query) -> bool:
    """Seeding at length two is sound when some atom covers exactly the first
    two order attributes and no atom binds a strict subset of them (such an
    atom would only ever be checked at the levels seeding skips)."""
    if q.num_attrs < 3:
        return False
    first_two = {q.order[0], q.order[1]}
    covered = False
    for s in q.schemas:
        aset = set(s.attrs)
        if aset == first_two:
            covered = True
        elif aset <= first_two:
            return False
    return covered


@dataclass
class RunResult:
    outputs: list[tuple[tuple[int, ...], int]]
    metrics: dict
    runtime: Runtime
    inflight_hwm: int = 0
    stored_hwm: list[int] = field(default_factory=list)

    @property
    def tuples(self) -> list[tuple[int, ...]]:
        return [t for t, _ in self.outputs]

    def counter(self) -> Counter:
        acc: Counter = Counter()
        for t, w in self.outputs:
            acc[t] += w
        return Counter({t: w for t, w in acc.items() if w != 0})


class DataflowJoin:
    """One evaluation over a compiled plan and a runtime.

    seed_streams holds per-worker reservoirs of (prefix, weight) pairs of
    length seed_level; seed_checks optionally verify injected seeds against
    already-bound atoms (one routed membership hop each) before counting.
    """

    def __init__(
        self,
        plan: QueryPlan,
        runtime: Runtime,
        seed_level: int,
        seed_streams: list[list[tuple[tuple[int, ...], int]]],
        seed_checks: tuple = (),
    ):
        self.plan = plan
        self.rt = runtime
        self.cfg = runtime.config
        self.w = runtime.workers
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
        self.by_rel = [
            {b.rel_pos: b for b in plan.bindings[j]} for j in range(m)
        ]
        self.outputs: list[tuple[tuple[int, ...], int]] = []
        self.inflight_hwm = 0
        self.stored_hwm = [0] * m

    # --- bookkeeping ---

    def _barrier(self) -> list[list]:
        inboxes = self.rt.barrier(self.queued)
        inflight = sum(len(box) for box in inboxes)
        if inflight > self.inflight_hwm:
            self.inflight_hwm = inflight
        if self.cfg.check_invariants:
            assert inflight <= self.b, f"in-flight {inflight} exceeds batch bound {self.b}"
        return inboxes

    def _store(self, j: int, worker: int, task: list) -> None:
        self.tasks[j][worker].append(task)
        remaining = task[3] - task[4]
        self.level_work[j][worker] += remaining
        self.level_count[j] += 1
        self.queued[worker] += 1
        if self.level_count[j] > self.stored_hwm[j]:
            self.stored_hwm[j] = self.level_count[j]
        if self.cfg.check_invariants:
            assert self.level_count[j] <= 2 * self.b, (
                f"level {j} stores {self.level_count[j]} tasks, bound {2 * self.b}"
            )

    # --- scheduling ---

    def _pick(self):
        bp = self.bp
        for j in range(self.m - 1, -1, -1):
            if any(x >= bp for x in self.level_work[j]):
                return ("batch", j, True)
            if j == self.seed_level and any(len(r) >= bp for r in self.reservoir):
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
        entries: list[tuple[tuple[int, ...], int]] = []
        for k in range(self.w):
            r = self.reservoir[k]
            took = 0
            while r and took < self.bp:
                p, wgt = r.popleft()
                took += 1
                ok = True
                for length in range(1, self.seed_level + 1):
                    if not plan.passes(p, length):
                        ok = False
                        break
                if ok:
                    entries.append((p, wgt))
        for slot, binding in self.seed_checks:
            stream = entries
            entries = []
            for p, wgt in stream:
                rt.send(rt.owner(binding.key_of(p)), (p, wgt))
            inboxes = self._barrier()
            for k in range(self.w):
                for p, wgt in inboxes[k]:
                    rt.add_work(k, 1, "seed_check")
                    if binding.view.contains(binding.key_of(p), p[slot]):
                        entries.append((p, wgt))
        if self.seed_level == self.m:
            canon = self.plan.canonical
            self.outputs.extend((canon(p), wgt) for p, wgt in entries)
        else:
            self._count_and_place(self.seed_level, entries)

    # --- one scheduled batch at level j ---

    def _run_batch(self, j: int) -> None:
        plan, rt = self.plan, self.rt
        bindings = plan.bindings[j]
        first = bindings[0]
        filters = plan.filters_at[j + 1]
        for k in range(self.w):
            budget = self.bp
            dq = self.tasks[j][k]
            while dq and budget > 0:
                task = dq[0]
                p, wgt, rel, min_c, cur = task
                binding = self.by_rel[j][rel]
                take = min(budget, min_c - cur)
                values = binding.view.enumerate(binding.key_of(p), cur, cur + take)
                rt.add_work(k, take, "propose")
                task[4] = cur + take
                self.level_work[j][k] -= take
                budget -= take
                if task[4] == min_c:
                    dq.popleft()
                    self.level_count[j] -= 1
                    self.queued[k] -= 1
                for e in values:
                    if filters and not plan.passes(p + (e,), j + 1):
                        continue
                    rt.send(rt.owner(first.key_of(p)), (p, e, wgt, rel))
        survivors = self._intersect(j)
        if j + 1 == self.m:
            canon = plan.canonical
            self.outputs.extend((canon(p2), wgt) for p2, wgt in survivors)
        else:
            self._count_and_place(j + 1, survivors)

    def _intersect(self, j: int) -> list[tuple[tuple[int, ...], int]]:
        """Route candidates through one membership hop per constraining atom."""
        plan, rt = self.plan, self.rt
        bindings = plan.bindings[j]
        survivors: list[tuple[tuple[int, ...], int]] = []
        for idx, binding in enumerate(bindings):
            nxt = bindings[idx + 1] if idx + 1 < len(bindings) else None
            inboxes = self._barrier()
            for k in range(self.w):
                for p, e, wgt, src in inboxes[k]:
                    if binding.rel_pos != src:
                        rt.add_work(k, 1, "membership")
                        if not binding.view.contains(binding.key_of(p), e):
                            continue
                    if nxt is not None:
                        rt.send(rt.owner(nxt.key_of(p)), (p, e, wgt, src))
                    else:
                        survivors.append((p + (e,), wgt))
        return survivors

    def _count_and_place(self, j_next: int, entries: list) -> None:
        """Learn each prefix's smallest extension count for the next attribute,
        then park it as a task on the worker owning that atom's key."""
        if not entries:
            return
        plan, rt = self.plan, self.rt
        bindings = plan.bindings[j_next]
        stream = [(p, wgt, None, -1) for p, wgt in entries]
        for binding in bindings:
            for p, wgt, min_c, min_rel in stream:
                rt.send(rt.owner(binding.key_of(p)), (p, wgt, min_c, min_rel))
            inboxes = self._barrier()
            stream = []
            for k in range(self.w):
                for p, wgt, min_c, min_rel in inboxes[k]:
                    rt.add_work(k, 1, "count")
                    c = binding.view.count(binding.key_of(p))
                    if min_c is None or c < min_c:
                        min_c, min_rel = c, binding.rel_pos
                    stream.append((p, wgt, min_c, min_rel))
        for p, wgt, min_c, min_rel in stream:
            if min_c:
                binding = self.by_rel[j_next][min_rel]
                rt.send(rt.owner(binding.key_of(p)), (p, wgt, min_rel, min_c))
        inboxes = self._barrier()
        for k in range(self.w):
            for p, wgt, min_rel, min_c in inboxes[k]:
                self._store(j_next, k, [p, wgt, min_rel, min_c, 0])


def run_static(
    q: Query,
    relations: Mapping[str, Iterable[tuple[int, ...]]] | None = None,
    config: WorkerConfig = WorkerConfig(),
    *,
    catalog: IndexCatalog | None = None,
    filters: tuple[Filter, ...] = (),
    seed_mode: str = "auto",
) -> RunResult:
    """Evaluate a query over static relations on the simulated workers.

    seed_mode: "edges" seeds length-two prefixes from the co-binding relation,
    "empty" grows everything from the empty prefix, "auto" picks "edges" when
    that is sound for the query shape.
    """
    if catalog is None:
        if relations is None:
            raise ValueError("need relations or a prebuilt catalog")
        catalog = IndexCatalog(relations)
    plan = compile_plan(q, static_provider(catalog), filters)

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

    rt = Runtime(config, catalog.indexed_per_worker(w, config.seed))
    engine = DataflowJoin(plan, rt, seed_level, streams)
    engine.run()
    return RunResult(
        outputs=engine.outputs,
        metrics=rt.report(),
        runtime=rt,
        inflight_hwm=engine.inflight_hwm,
        stored_hwm=list(engine.stored_hwm),
    )
