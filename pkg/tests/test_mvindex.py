import random
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcoj.errors import FrontierRegression, StaleTimestamp
from wcoj.mvindex import DynamicGraphStore, MultiVersionIndex
from wcoj.relations import SignedUpdate


def replay(updates, key, time):
    """Naive oracle: accumulate weights per value over all t <= time."""
    acc = defaultdict(int)
    for k, v, t, w in updates:
        if k == key and t <= time:
            acc[v] += w
    return {v: w for v, w in acc.items() if w != 0}


def test_insert_then_delete_visible_between():
    idx = MultiVersionIndex()
    idx.ingest([((1,), 2, 0, +1)])
    idx.ingest([((1,), 2, 5, -1)])
    assert idx.query_at((1,), 3) == {2: 1}
    assert idx.query_at((1,), 5) == {}
    assert idx.query_at((1,), 0) == {2: 1}


def test_stale_ingest_rejected_after_advance():
    idx = MultiVersionIndex()
    idx.ingest([((1,), 2, 4, +1)])
    idx.advance(6)
    with pytest.raises(StaleTimestamp):
        idx.ingest([((1,), 3, 3, +1)])
    idx.ingest([((1,), 3, 6, +1)])


def test_frontier_regression_rejected():
    idx = MultiVersionIndex()
    idx.advance(4)
    with pytest.raises(FrontierRegression):
        idx.advance(3)
    idx.advance(4)  # idempotent


def test_advance_and_consolidation_preserve_answers():
    rng = random.Random(11)
    updates = []
    for t in range(40):
        key = (rng.randrange(4),)
        updates.append((key, rng.randrange(6), t, rng.choice([-1, 1])))
    idx = MultiVersionIndex()
    for u in updates:
        idx.ingest([u])
    probes = [((k,), t) for k in range(4) for t in range(-1, 41, 7)]
    before = {(k, t): idx.query_at(k, t) for k, t in probes}
    idx.advance(40)
    mid = {(k, t): idx.query_at(k, t) for k, t in probes}
    idx.consolidate()
    after = {(k, t): idx.query_at(k, t) for k, t in probes}
    for k, t in probes:
        assert before[(k, t)] == replay(updates, k, t)
        assert mid[(k, t)] == before[(k, t)]
        assert after[(k, t)] == before[(k, t)]


def test_consolidation_drops_cancelled_entries():
    idx = MultiVersionIndex()
    idx.ingest([((1,), 2, 0, +1), ((1,), 2, 0, -1), ((1,), 3, 1, +1)])
    idx.advance(10)
    idx.consolidate()
    assert idx.total_entries() == 1
    assert idx.query_at((1,), 5) == {3: 1}


def test_negative_weight_flagged_not_raised():
    idx = MultiVersionIndex()
    idx.ingest([((1,), 2, 0, -1)])
    assert idx.query_at((1,), 0) == {2: -1}
    assert idx.negative_weight_events == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_property_random_streams_match_replay(seed):
    rng = random.Random(seed)
    updates = []
    t = 0
    for _ in range(60):
        t += rng.randrange(2)
        updates.append(((rng.randrange(5),), rng.randrange(5), t, rng.choice([-1, 1])))
    idx = MultiVersionIndex()
    idx.ingest(updates)
    if rng.random() < 0.5:
        idx.advance(t + 1)
        idx.consolidate()
    for _ in range(20):
        key = (rng.randrange(5),)
        when = rng.randrange(-1, t + 2)
        assert idx.query_at(key, when) == replay(updates, key, when)


def test_store_versioned_views():
    store = DynamicGraphStore({(1, 2), (3, 2)}, load_time=0)
    store.ingest([SignedUpdate((1, 4), 1, +1), SignedUpdate((1, 2), 1, -1)])
    old = store.view((0,), 1, 0)
    new = store.view((0,), 1, 1)
    assert old.enumerate((1,), 0, old.count((1,))) == (2,)
    assert new.enumerate((1,), 0, new.count((1,))) == (4,)
    rev_new = store.view((1,), 0, 1)
    assert rev_new.enumerate((2,), 0, rev_new.count((2,))) == (3,)
    pi1 = store.view((), 0, 1)
    assert pi1.enumerate((), 0, pi1.count(())) == (1, 3)
    assert pi1.contains((), 1)
    assert not pi1.contains((), 2)
    store.advance(2)
    assert store.edges_at(1) == {(1, 4), (3, 2)}
    assert store.edges_at(0) == {(1, 2), (3, 2)}
