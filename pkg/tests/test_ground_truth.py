"""Exact detector tests: causal order, valid snapshots, mutex regions."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from hlcmon.clock import HlcTimestamp
from hlcmon.ground_truth import (
    CausalOrder,
    detect_all_valid,
    detect_mutex_violations,
    happened_before,
)
from hlcmon.monitor import SumGreater, UnsupportedPredicateError
from hlcmon.trace import Event, Trace, extract_intervals

import oracles


def ev(seq, proc, kind, pt, l, c=0, **kw):
    ts = HlcTimestamp(l, c)
    return Event(seq, proc, kind, pt, ts, kw.get("var"), kw.get("val"), kw.get("msg_id"))


def mk(n, epsilon, events):
    events = sorted(events, key=lambda e: (e.ts, e.proc))
    return Trace(config={"n": n, "epsilon": epsilon}, events=events)


def chain_trace():
    """p0 sends to p1, p1 relays to p2; eps is too wide to add gap edges."""
    return mk(3, 50, [
        ev(0, 0, "local", 1, 1, var="v", val=True),
        ev(1, 0, "send", 2, 2, msg_id=0),
        ev(0, 1, "recv", 3, 3, msg_id=0),
        ev(1, 1, "send", 4, 4, msg_id=1),
        ev(0, 2, "recv", 5, 5, msg_id=1),
        ev(1, 2, "local", 6, 6, var="v", val=True),
    ])


def test_program_order_is_causal():
    t = chain_trace()
    order = CausalOrder(t)
    assert order.happened_before(t.events[0], t.events[1])
    assert not order.happened_before(t.events[1], t.events[0])
    assert not order.happened_before(t.events[0], t.events[0])


def test_message_chains_are_transitively_causal():
    t = chain_trace()
    order = CausalOrder(t)
    first = t.events[0]          # p0 write
    relay_out = t.events[3]      # p1 send
    last = t.events[5]           # p2 write
    assert order.happened_before(first, last)
    assert order.happened_before(relay_out, last)
    assert not order.happened_before(last, first)


def test_clock_gap_implies_order():
    near = mk(2, 5, [
        ev(0, 0, "local", 1, 1, var="v", val=True),
        ev(0, 1, "local", 6, 6, var="v", val=True),
    ])
    o = CausalOrder(near)
    assert o.concurrent(near.events[0], near.events[1])  # 1 + 5 is not < 6

    far = mk(2, 5, [
        ev(0, 0, "local", 1, 1, var="v", val=True),
        ev(0, 1, "local", 7, 7, var="v", val=True),
    ])
    o = CausalOrder(far)
    assert o.happened_before(far.events[0], far.events[1])
    assert not o.happened_before(far.events[1], far.events[0])


def test_happened_before_caches_the_order_on_the_trace():
    t = chain_trace()
    assert happened_before(t, t.events[0], t.events[5])
    first = t._causal_order
    assert not happened_before(t, t.events[5], t.events[0])
    assert t._causal_order is first


def test_causal_order_matches_brute_force():
    rng = random.Random(20)
    for _ in range(40):
        t = oracles.random_tiny_trace(rng)
        expected = oracles.brute_happened_before(t)
        order = CausalOrder(t)
        for a in t.events:
            for b in t.events:
                got = order.happened_before(a, b)
                want = ((a.proc, a.seq), (b.proc, b.seq)) in expected
                assert got == want, (t.config, a, b)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_causal_order_is_a_strict_partial_order(seed):
    t = oracles.random_tiny_trace(random.Random(seed), max_events=20)
    order = CausalOrder(t)
    evs = t.events
    for a in evs:
        assert not order.happened_before(a, a)
        for b in evs:
            if order.happened_before(a, b):
                assert not order.happened_before(b, a)
                for c in evs:
                    if order.happened_before(b, c):
                        assert order.happened_before(a, c)


def solo_trace():
    return mk(1, 3, [
        ev(0, 0, "local", 1, 1, var="v", val=True),
        ev(1, 0, "local", 2, 2, var="v", val=False),
        ev(2, 0, "local", 5, 5, var="v", val=True),
    ])


def test_single_process_witnesses_every_interval():
    snaps = detect_all_valid(solo_trace())
    assert [s.times for s in snaps] == [(HlcTimestamp(1, 0),), (HlcTimestamp(5, 0),)]
    assert snaps[0].region_start == HlcTimestamp(1, 0)
    assert snaps[0].region_end == HlcTimestamp(5, 2**31 - 1)  # end 2 plus eps 3
    assert snaps[1].region_end is None
    assert [s.interval_indices for s in snaps] == [(0,), (1,)]


def test_intervals_argument_overrides_trace_extraction():
    assert detect_all_valid(solo_trace(), intervals=[[]]) == []


def gap_trace():
    return mk(2, 5, [
        ev(0, 0, "local", 1, 1, var="v", val=True),
        ev(1, 0, "local", 2, 2, var="v", val=False),
        ev(0, 1, "local", 7, 7, var="v", val=True),
        ev(1, 1, "local", 8, 8, var="v", val=False),
    ])


def test_skew_bound_blocks_distant_intervals():
    assert detect_all_valid(gap_trace()) == []


def test_epsilon_argument_widens_the_bound():
    snaps = detect_all_valid(gap_trace(), epsilon=6)
    assert len(snaps) == 1
    assert snaps[0].times == (HlcTimestamp(1, 0), HlcTimestamp(7, 0))
    assert snaps[0].point == HlcTimestamp(7, 0)
    assert snaps[0].region_end == HlcTimestamp(8, 2**31 - 1)


def overlap_trace(with_message):
    """p0 true on [2,4), p1 true on [8,10); optionally p0 messages p1
    from inside its interval to after p1's begins, which forbids any cut
    that pairs the two intervals."""
    events = [ev(0, 0, "local", 2, 2, var="v", val=True)]
    if with_message:
        events += [
            ev(1, 0, "send", 4, 4, msg_id=0),
            ev(2, 0, "local", 4, 4, c=1, var="v", val=False),
            ev(0, 1, "recv", 8, 8, msg_id=0),
            ev(1, 1, "local", 8, 8, c=1, var="v", val=True),
            ev(2, 1, "local", 10, 10, var="v", val=False),
        ]
    else:
        events += [
            ev(1, 0, "local", 4, 4, var="v", val=False),
            ev(0, 1, "local", 8, 8, var="v", val=True),
            ev(1, 1, "local", 10, 10, var="v", val=False),
        ]
    return mk(2, 5, events)


def test_witness_without_message():
    snaps = detect_all_valid(overlap_trace(with_message=False))
    assert len(snaps) == 1
    assert snaps[0].times == (HlcTimestamp(3, 0), HlcTimestamp(8, 0))
    assert snaps[0].point == HlcTimestamp(8, 0)
    assert snaps[0].region_start == HlcTimestamp(8, 0)
    assert snaps[0].region_end == HlcTimestamp(9, 2**31 - 1)
    assert snaps[0].interval_indices == (0, 0)


def test_message_forbids_the_same_pairing():
    assert detect_all_valid(overlap_trace(with_message=True)) == []


def test_witnesses_match_brute_force_exactly():
    rng = random.Random(77)
    for _ in range(60):
        t = oracles.random_tiny_trace(rng, max_events=30)
        queues = extract_intervals(t, "v")
        want = oracles.brute_valid_snapshots(
            t, [list(q) for q in queues], [True] * t.n
        )
        got = detect_all_valid(t)
        assert len(got) == len(want), t.config
        for snap, (times, point, picked) in zip(got, want):
            assert snap.times == times
            assert snap.point == point
            assert snap.interval_indices == tuple(picked[i] for i in range(t.n))
            start, end = oracles.snapshot_region(t, point, picked, queues)
            assert (snap.region_start, snap.region_end) == (start, end)


def test_witnesses_are_valid_from_first_principles():
    rng = random.Random(31)
    checked = 0
    for _ in range(60):
        t = oracles.random_tiny_trace(rng, max_events=30)
        queues = extract_intervals(t, "v")
        messages = t.messages()
        last_point = None
        for snap in detect_all_valid(t):
            checked += 1
            for i, ts in enumerate(snap.times):
                iv = queues[i][snap.interval_indices[i]]
                assert iv.start <= ts
                assert iv.end is None or ts < iv.end
                for u in snap.times:
                    assert abs(ts.l - u.l) <= t.epsilon
            for m in messages:
                sent = snap.times[m.sender] <= m.send_ts
                seen = snap.times[m.receiver] >= m.recv_ts
                assert not (sent and seen)
            if last_point is not None:
                assert last_point <= snap.point
            last_point = snap.point
    assert checked > 30


def test_mutex_hand_case():
    t = mk(3, 2, [
        ev(0, 0, "local", 1, 1, var="v", val=True),
        ev(1, 0, "local", 6, 6, var="v", val=False),
        ev(0, 1, "local", 4, 4, var="v", val=True),
        ev(1, 1, "local", 9, 9, var="v", val=False),
    ])
    hits = detect_mutex_violations(t, "v")
    assert len(hits) == 1
    snap = hits[0]
    assert snap.times == (HlcTimestamp(2, 0), HlcTimestamp(4, 0), HlcTimestamp(2, 0))
    assert snap.point == HlcTimestamp(4, 0)
    assert snap.region_start == HlcTimestamp(4, 0)
    assert snap.region_end == HlcTimestamp(8, 2**31 - 1)
    assert snap.interval_indices == (0, 0, None)


def test_mutex_never_fires_without_overlap():
    assert detect_mutex_violations(gap_trace(), "v") == []


def test_mutex_regions_match_brute_force():
    rng = random.Random(404)
    nonempty = 0
    for _ in range(40):
        t = oracles.random_tiny_trace(rng, max_events=30, set_prob=0.7)
        want = oracles.brute_mutex_regions(t, "v")
        got = [(s.region_start, s.region_end) for s in detect_mutex_violations(t, "v")]
        assert got == want, t.config
        nonempty += bool(got)
    assert nonempty > 5


def test_non_conjunctive_predicates_are_rejected():
    with pytest.raises(UnsupportedPredicateError):
        detect_all_valid(solo_trace(), SumGreater("v", 1))
