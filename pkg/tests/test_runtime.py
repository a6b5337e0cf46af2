import pytest

from wcoj.runtime import Runtime, WorkerConfig, metrics_json


def test_exchange_counts_load_per_round():
    rt = Runtime(WorkerConfig(workers=4, seed=1))
    inboxes = rt.exchange([(0, "a"), (1, "b"), (2, "c"), (3, "d")])
    assert [len(b) for b in inboxes] == [1, 1, 1, 1]
    assert rt.rounds == 1
    assert rt.max_load == 1
    assert rt.total_comm == 4
    rt.exchange([(2, "x"), (2, "y")])
    assert rt.max_load == 2
    assert rt.total_comm == 6


def test_barrier_separates_sends():
    rt = Runtime(WorkerConfig(workers=2))
    rt.send(0, 1)
    first = rt.barrier()
    rt.send(1, 2)
    second = rt.barrier()
    assert first == [[1], []]
    assert second == [[], [2]]


def test_owner_routing_is_seeded_and_deterministic():
    a = Runtime(WorkerConfig(workers=4, seed=7))
    b = Runtime(WorkerConfig(workers=4, seed=7))
    keys = [(i, i * 3) for i in range(50)]
    assert [a.owner(k) for k in keys] == [b.owner(k) for k in keys]
    c = Runtime(WorkerConfig(workers=4, seed=8))
    assert [a.owner(k) for k in keys] != [c.owner(k) for k in keys]
    assert all(0 <= a.owner(k) < 4 for k in keys)


def test_conservation_every_send_received_once():
    rt = Runtime(WorkerConfig(workers=3, seed=2))
    delivered = 0
    for r in range(5):
        for i in range(r + 3):
            rt.send(rt.owner((r, i)), i)
        delivered += sum(len(b) for b in rt.barrier())
    rt.finish()
    assert delivered == rt.sent_total == rt.total_comm
    assert sum(rt.recv_total) == delivered


def test_memory_counts_indexed_plus_queued_plus_load():
    rt = Runtime(WorkerConfig(workers=2), indexed_per_worker=[10, 5])
    rt.send(0, "p")
    rt.barrier(queued_per_worker=[3, 4])
    assert rt.memory_max == 10 + 5 + 3 + 4 + 1


def test_round_traffic_pairs_work_with_its_delivery():
    rt = Runtime(WorkerConfig(workers=2))
    rt.set_mode(True)
    rt.send(0, "a")
    rt.send(0, "b")
    inboxes = rt.barrier()
    rt.add_work(0, len(inboxes[0]), kind="probe")  # processing the delivery
    rt.barrier()
    rt.finish()
    assert rt.full_rounds >= 1
    assert rt.max_round_traffic_full == 4  # 2 received + 2 work units
    assert rt.probe_kinds == {"probe": 2}


def test_drain_rounds_excluded_from_full_maximum():
    rt = Runtime(WorkerConfig(workers=2))
    rt.set_mode(False)
    rt.send(0, "a")
    rt.barrier()
    rt.add_work(0, 50)
    rt.finish()
    assert rt.max_round_traffic_full == 0
    assert rt.max_round_traffic == 51


def test_report_schema_and_json_stability():
    def one_run():
        rt = Runtime(WorkerConfig(workers=2, seed=3), indexed_per_worker=[4, 4])
        rt.exchange([(rt.owner((i,)), i) for i in range(6)])
        rt.add_work(1, 2)
        rt.finish()
        return rt.report()

    rep = one_run()
    assert set(rep) == {"rounds", "total_comm", "max_load", "memory_max", "per_worker"}
    assert [pw["worker"] for pw in rep["per_worker"]] == [0, 1]
    assert set(rep["per_worker"][0]) == {"worker", "received", "work", "indexed"}
    assert metrics_json(rep) == metrics_json(one_run())
    assert metrics_json(rep).endswith("\n")


def test_config_validation():
    with pytest.raises(ValueError):
        WorkerConfig(workers=0)
    assert WorkerConfig(workers=4, batch_per_worker=3).batch_total == 12


def test_skew_ratio_balanced_vs_hot():
    rt = Runtime(WorkerConfig(workers=4))
    for k in range(4):
        rt.add_work(k, 10)
    assert rt.skew_ratio() == 1.0
    rt.add_work(0, 30)
    assert rt.skew_ratio() == pytest.approx(40 / 17.5)