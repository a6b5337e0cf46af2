"""Deterministic logical-worker runtime: hash routing, rounds, cost ledger.

Workers are logical; everything executes on one thread in worker order, which
makes runs reproducible bit for bit. The observable contract is the message
pattern: sends are buffered, a barrier delivers every buffered envelope at
once, and nothing sent after a barrier can be seen before the next one.

Accounting follows the usual synchronous-rounds cost model, in tuple units:
rounds r, per-round per-worker received load L, total communication C, and
peak memory M = max over rounds of the summed per-worker residency (indexed
input plus queued work plus that round's deliveries). Computation is metered
separately as unit-cost probes and pairs with the round whose deliveries it
processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .hashing import owner_of


@dataclass(frozen=True)
class WorkerConfig:
    workers: int = 1
    batch_per_worker: int = 1
    seed: int = 0
    check_invariants: bool = True

    def __post_init__(self):
        if self.workers < 1 or self.batch_per_worker < 1:
            raise ValueError("workers and batch_per_worker must be >= 1")

    @property
    def batch_total(self) -> int:
        return self.workers * self.batch_per_worker


class Runtime:
    def __init__(self, config: WorkerConfig, indexed_per_worker: list[int] | None = None):
        w = config.workers
        self.config = config
        self.workers = w
        self.indexed = list(indexed_per_worker) if indexed_per_worker else [0] * w
        self._pending: list[tuple[int, object]] = []
        self.rounds = 0
        self.total_comm = 0
        self.sent_total = 0
        self.max_load = 0
        self.memory_max = 0
        self.recv_total = [0] * w
        self.work_total = [0] * w
        self.probe_kinds: dict[str, int] = {}
        # the processing round in flight: deliveries it received, work accrued
        self._round_recv = [0] * w
        self._round_work = [0] * w
        self._round_full = False
        self._mode_full = False
        self.full_rounds = 0
        self.max_round_traffic_full = 0
        self.max_round_traffic = 0

    # --- routing ---

    def owner(self, key: tuple) -> int:
        return owner_of(key, self.workers, self.config.seed)

    def send(self, dest: int, payload) -> None:
        self._pending.append((dest, payload))

    def pending_count(self) -> int:
        return len(self._pending)

    # --- accounting ---

    def add_work(self, worker: int, n: int = 1, kind: str | None = None) -> None:
        self.work_total[worker] += n
        self._round_work[worker] += n
        if kind is not None:
            self.probe_kinds[kind] = self.probe_kinds.get(kind, 0) + n

    def set_mode(self, full: bool) -> None:
        """Tag subsequent rounds as full (every worker saturated) or drain."""
        self._mode_full = full

    def _close_round(self) -> None:
        traffic = 0
        for k in range(self.workers):
            t = self._round_recv[k] + self._round_work[k]
            if t > traffic:
                traffic = t
        if traffic > self.max_round_traffic:
            self.max_round_traffic = traffic
        if self._round_full:
            self.full_rounds += 1
            if traffic > self.max_round_traffic_full:
                self.max_round_traffic_full = traffic
        self._round_recv = [0] * self.workers
        self._round_work = [0] * self.workers

    def barrier(self, queued_per_worker: list[int] | None = None) -> list[list]:
        """Deliver all buffered envelopes; returns one inbox per worker.

        Inbox order is send order, so it is deterministic for a fixed config.
        """
        self._close_round()
        w = self.workers
        inboxes: list[list] = [[] for _ in range(w)]
        counts = [0] * w
        for dest, payload in self._pending:
            inboxes[dest].append(payload)
            counts[dest] += 1
        n = len(self._pending)
        self._pending = []
        self.total_comm += n
        self.sent_total += n
        self.rounds += 1
        load = 0
        for k in range(w):
            c = counts[k]
            self.recv_total[k] += c
            if c > load:
                load = c
        if load > self.max_load:
            self.max_load = load
        queued = queued_per_worker or [0] * w
        resident = sum(self.indexed) + sum(queued) + n
        if resident > self.memory_max:
            self.memory_max = resident
        self._round_recv = counts
        self._round_full = self._mode_full
        return inboxes

    def exchange(self, messages: list[tuple[int, object]], queued=None) -> list[list]:
        """Send a batch and run one barrier; the one-shot form of the above."""
        for dest, payload in messages:
            self.send(dest, payload)
        return self.barrier(queued)

    def finish(self) -> None:
        assert not self._pending, "finish with undelivered envelopes"
        self._close_round()

    # --- reporting ---

    def report(self) -> dict:
        return {
            "rounds": self.rounds,
            "total_comm": self.total_comm,
            "max_load": self.max_load,
            "memory_max": self.memory_max,
            "per_worker": [
                {
                    "worker": k,
                    "received": self.recv_total[k],
                    "work": self.work_total[k],
                    "indexed": self.indexed[k],
                }
                for k in range(self.workers)
            ],
        }

    def skew_ratio(self) -> float:
        """Max over workers of cumulative (received + work), over the mean."""
        totals = [self.recv_total[k] + self.work_total[k] for k in range(self.workers)]
        mean = sum(totals) / self.workers
        return max(totals) / mean if mean else 1.0


def metrics_json(report: dict) -> str:
    """Canonical one-line JSON; byte-identical across reruns of the same config."""
    return json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"
