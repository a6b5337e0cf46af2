"""Distributed engine: result equivalence, probe parity, batch invariants."""

from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from wcoj.dataflow import edge_seeding_applicable, run_static
from wcoj.extindex import IndexCatalog
from wcoj.generic_join import JoinStats, run as gj_run
from wcoj.relations import Filter, Query, RelationSchema
from wcoj.runtime import WorkerConfig, metrics_json
from wcoj.testkit import (
    diamond_query,
    erdos_renyi,
    four_clique_query,
    golden_graph,
    oracle_join,
    star,
    symmetrize,
    triangle_query,
)


def run_counter(q, rels, **kw):
    res = run_static(q, rels, **kw)
    return Counter(res.tuples)


def test_golden_triangles_all_configs():
    q = triangle_query()
    rels = {"e": golden_graph()}
    want = oracle_join(q, rels)
    for w in (1, 2, 4):
        for bp in (1, 3, 16):
            cfg = WorkerConfig(workers=w, batch_per_worker=bp)
            for mode in ("edges", "empty"):
                got = run_counter(q, rels, config=cfg, seed_mode=mode)
                assert got == want, (w, bp, mode)


def test_matches_oracle_on_random_graphs():
    queries = [triangle_query(), diamond_query(), four_clique_query()]
    configs = [
        WorkerConfig(workers=1, batch_per_worker=1),
        WorkerConfig(workers=2, batch_per_worker=3),
        WorkerConfig(workers=4, batch_per_worker=16),
    ]
    for gseed in (3, 11, 27, 63):
        rels = {"e": symmetrize(erdos_renyi(10, 0.3, seed=gseed))}
        for q in queries:
            want = oracle_join(q, rels)
            for cfg in configs:
                assert run_counter(q, rels, config=cfg) == want, (gseed, cfg)


def test_star_graph_with_hub():
    q = triangle_query()
    rels = {"e": star(60)}
    want = oracle_join(q, rels)
    cfg = WorkerConfig(workers=4, batch_per_worker=8)
    assert run_counter(q, rels, config=cfg) == want


def test_filters_flow_through():
    q = triangle_query()
    rels = {"e": symmetrize(erdos_renyi(12, 0.35, seed=5))}
    filters = (Filter(0, "<", 1), Filter(1, "<", 2))
    want = oracle_join(q, rels, filters=filters)
    cfg = WorkerConfig(workers=3, batch_per_worker=4)
    got = run_counter(q, rels, config=cfg, filters=filters)
    assert got == want
    assert all(a < b < c for a, b, c in got)


def test_probe_parity_with_serial_join():
    # growing from the empty prefix performs exactly the serial probe sequence,
    # independent of worker count and batch size
    q = diamond_query()
    rels = {"e": symmetrize(erdos_renyi(11, 0.3, seed=8))}
    stats = JoinStats()
    serial = Counter(gj_run(q, rels, stats=stats))
    for w, bp in ((1, 1), (1, 7), (3, 2), (4, 16)):
        cfg = WorkerConfig(workers=w, batch_per_worker=bp)
        res = run_static(q, rels, config=cfg, seed_mode="empty")
        kinds = res.runtime.probe_kinds
        assert kinds["count"] == stats.count_probes, (w, bp)
        assert kinds["membership"] == stats.membership_probes, (w, bp)
        assert kinds["propose"] == stats.proposals, (w, bp)
        assert Counter(res.tuples) == serial


def test_edge_seeding_probe_overhead_is_linear():
    q = triangle_query()
    edges = symmetrize(erdos_renyi(14, 0.3, seed=21))
    rels = {"e": edges}
    n = len(q.schemas)
    total_in = n * len(edges)
    probes = {}
    for mode in ("empty", "edges"):
        res = run_static(
            q, rels, WorkerConfig(workers=2, batch_per_worker=8), seed_mode=mode
        )
        kinds = res.runtime.probe_kinds
        probes[mode] = kinds["count"] + kinds["membership"]
    assert abs(probes["edges"] - probes["empty"]) <= 4 * n * total_in + 64


def test_batch_invariants_recorded():
    q = four_clique_query()
    rels = {"e": symmetrize(erdos_renyi(12, 0.4, seed=2))}
    cfg = WorkerConfig(workers=4, batch_per_worker=4)
    res = run_static(q, rels, config=cfg)
    b = cfg.batch_total
    assert 0 < res.inflight_hwm <= b
    assert max(res.stored_hwm) <= 2 * b
    rt = res.runtime
    assert rt.sent_total == sum(rt.recv_total)
    assert rt.rounds > 0


def test_deterministic_reruns():
    q = diamond_query()
    rels = {"e": symmetrize(erdos_renyi(10, 0.35, seed=13))}
    cfg = WorkerConfig(workers=4, batch_per_worker=3, seed=99)
    a = run_static(q, rels, config=cfg)
    b = run_static(q, rels, config=cfg)
    assert a.outputs == b.outputs
    assert metrics_json(a.metrics) == metrics_json(b.metrics)
    other = run_static(
        q, rels, config=WorkerConfig(workers=4, batch_per_worker=3, seed=100)
    )
    assert Counter(other.tuples) == Counter(a.tuples)


def test_seeding_soundness_rules():
    tri = triangle_query()
    assert edge_seeding_applicable(tri)
    # a unary atom over an early attribute must force empty seeding
    lopsided = Query(
        schemas=(
            RelationSchema("e", (0, 1)),
            RelationSchema("e", (1, 2)),
            RelationSchema("v", (0,)),
        ),
        num_attrs=3,
    )
    assert not edge_seeding_applicable(lopsided)
    two = Query(schemas=(RelationSchema("e", (0, 1)),), num_attrs=2)
    assert not edge_seeding_applicable(two)
    with pytest.raises(ValueError):
        run_static(two, {"e": [(1, 2)]}, seed_mode="edges")


def test_degenerate_shapes():
    one = Query(schemas=(RelationSchema("v", (0,)),), num_attrs=1)
    res = run_static(one, {"v": [(3,), (1,), (2,)]})
    assert sorted(res.tuples) == [(1,), (2,), (3,)]

    two = Query(schemas=(RelationSchema("e", (0, 1)),), num_attrs=2)
    res = run_static(two, {"e": [(1, 2), (2, 3)]}, config=WorkerConfig(workers=2))
    assert Counter(res.tuples) == Counter({(1, 2): 1, (2, 3): 1})

    unary_filter = Query(
        schemas=(RelationSchema("e", (0, 1)), RelationSchema("e", (1, 2)),
                 RelationSchema("v", (1,))),
        num_attrs=3,
    )
    rels = {"e": [(1, 2), (2, 3), (4, 2)], "v": [(2,)]}
    want = oracle_join(unary_filter, rels)
    got = run_counter(unary_filter, rels, config=WorkerConfig(workers=2))
    assert got == want
    assert got == Counter({(1, 2, 3): 1, (4, 2, 3): 1})


def test_empty_graph_and_no_matches():
    q = triangle_query()
    res = run_static(q, {"e": []})
    assert res.tuples == []
    res = run_static(q, {"e": [(1, 2), (2, 3)]}, config=WorkerConfig(workers=2))
    assert res.tuples == []


def test_shared_catalog_reuse():
    q = triangle_query()
    rels = {"e": golden_graph()}
    cat = IndexCatalog(rels)
    first = run_static(q, catalog=cat, config=WorkerConfig(workers=2))
    second = run_static(q, catalog=cat, config=WorkerConfig(workers=2))
    assert first.outputs == second.outputs


@settings(max_examples=20, deadline=None)
@given(
    st.sets(
        st.tuples(st.integers(0, 8), st.integers(0, 8)),
        max_size=40,
    ),
    st.sampled_from([(1, 2), (2, 2), (3, 5)]),
)
def test_property_triangles_match_oracle(edge_set, shape):
    edges = sorted(edge_set)
    q = triangle_query()
    rels = {"e": edges}
    w, bp = shape
    got = run_counter(q, rels, config=WorkerConfig(workers=w, batch_per_worker=bp))
    assert got == oracle_join(q, rels)
