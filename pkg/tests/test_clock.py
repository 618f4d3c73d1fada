import random

import pytest
from hypothesis import given, settings, strategies as st

from hlcmon.clock import (
    DEFAULT_C_MAX,
    ClockConfig,
    CounterOverflowError,
    HlcState,
    HlcTimestamp,
    HvcState,
    hlc_compare,
    hlc_extend,
    hlc_local,
    hlc_recv,
    hvc_merge,
    hvc_update,
    successor,
)

import oracles

CFG = ClockConfig()


def test_local_advances_to_physical_time():
    state = HlcState(l=5, c=2)
    assert hlc_local(state, 7, CFG) == HlcTimestamp(7, 0)
    assert (state.l, state.c) == (7, 0)


def test_local_bumps_counter_when_l_holds():
    state = HlcState(l=5, c=2)
    assert hlc_local(state, 5, CFG) == HlcTimestamp(5, 3)


def test_local_from_genesis():
    state = HlcState()
    assert hlc_local(state, 0, CFG) == HlcTimestamp(0, 1)


def test_recv_merges_counters_on_equal_l():
    state = HlcState(l=5, c=2)
    assert hlc_recv(state, 4, HlcTimestamp(5, 7), CFG) == HlcTimestamp(5, 8)


def test_recv_resets_counter_when_pt_wins():
    state = HlcState(l=3, c=1)
    assert hlc_recv(state, 9, HlcTimestamp(5, 7), CFG) == HlcTimestamp(9, 0)


def test_recv_ignores_stale_message():
    state = HlcState(l=5, c=2)
    assert hlc_recv(state, 4, HlcTimestamp(3, 0), CFG) == HlcTimestamp(5, 3)


def test_negative_physical_time_rejected():
    with pytest.raises(ValueError):
        hlc_local(HlcState(), -1, CFG)
    with pytest.raises(ValueError):
        hlc_recv(HlcState(), -1, HlcTimestamp(0, 0), CFG)


def test_counter_overflow_raises():
    cfg = ClockConfig(c_max=2)
    state = HlcState(l=5, c=0)
    hlc_local(state, 0, cfg)
    hlc_local(state, 0, cfg)
    with pytest.raises(CounterOverflowError):
        hlc_local(state, 0, cfg)


def test_recv_counter_overflow_raises():
    cfg = ClockConfig(c_max=3)
    state = HlcState(l=5, c=1)
    with pytest.raises(CounterOverflowError):
        hlc_recv(state, 0, HlcTimestamp(5, 3), cfg)


def test_compare_is_lexicographic():
    assert hlc_compare(HlcTimestamp(1, 9), HlcTimestamp(2, 0)) == -1
    assert hlc_compare(HlcTimestamp(2, 0), HlcTimestamp(2, 0)) == 0
    assert hlc_compare(HlcTimestamp(2, 1), HlcTimestamp(2, 0)) == 1


def test_extend_adds_to_l_and_saturates_c():
    assert hlc_extend(HlcTimestamp(3, 0), 5, CFG) == HlcTimestamp(8, CFG.c_max)
    assert hlc_extend(HlcTimestamp(4, 0), 3, CFG) == HlcTimestamp(7, CFG.c_max)
    assert hlc_extend(HlcTimestamp(4, 0), 0, CFG) == HlcTimestamp(4, CFG.c_max)


def test_extend_rejects_negative():
    with pytest.raises(ValueError):
        hlc_extend(HlcTimestamp(1, 0), -1, CFG)


def test_successor_steps_counter_then_l():
    cfg = ClockConfig(c_max=3)
    assert successor(HlcTimestamp(4, 1), cfg) == HlcTimestamp(4, 2)
    assert successor(HlcTimestamp(4, 3), cfg) == HlcTimestamp(5, 0)


def test_clock_config_validation():
    with pytest.raises(ValueError):
        ClockConfig(c_max=0)
    with pytest.raises(ValueError):
        ClockConfig(epsilon=-1)


timestamps = st.builds(
    HlcTimestamp,
    st.integers(min_value=0, max_value=1000),
    st.integers(min_value=0, max_value=50),
)


@given(timestamps, timestamps)
def test_compare_matches_tuple_order(a, b):
    assert hlc_compare(a, b) == ((a.l, a.c) > (b.l, b.c)) - ((a.l, a.c) < (b.l, b.c))


@given(timestamps, st.integers(min_value=0, max_value=100))
def test_extend_bounds_everything_within_gamma(t, gamma):
    top = hlc_extend(t, gamma, CFG)
    assert top >= t
    assert top.l == t.l + gamma
    # any timestamp whose l stays within gamma of t.l is below the bound
    probe = HlcTimestamp(t.l + gamma, CFG.c_max - 1)
    assert probe <= top


@given(timestamps)
def test_successor_is_the_least_greater_point(t):
    cfg = ClockConfig(c_max=60)
    nxt = successor(t, cfg)
    assert nxt > t
    if nxt.l == t.l:
        assert nxt.c == t.c + 1
    else:
        assert (nxt.l, nxt.c) == (t.l + 1, 0)


@given(
    st.lists(
        st.tuples(st.booleans(), st.integers(min_value=0, max_value=5)),
        min_size=1,
        max_size=60,
    )
)
@settings(max_examples=60)
def test_local_stream_is_strictly_increasing(steps):
    state = HlcState()
    pt = 0
    prev = None
    for is_recv, gap in steps:
        pt += gap
        if is_recv:
            ts = hlc_recv(state, pt, HlcTimestamp(pt + 1, 2), CFG)
        else:
            ts = hlc_local(state, pt, CFG)
        if prev is not None:
            assert ts > prev
        assert ts.l >= pt
        prev = ts


# vector clocks


def test_hvc_first_local_event():
    state = HvcState(proc=0, n=2)
    stamp = hvc_update(state, 1, CFG)
    assert stamp.entries == (1, 0)
    assert stamp.own_hlc == HlcTimestamp(1, 0)
    assert stamp.proc == 0


def test_hvc_merge_componentwise_max():
    assert hvc_merge((5, 2), (3, 7)) == (5, 7)
    with pytest.raises(ValueError):
        hvc_merge((1, 2), (1, 2, 3))


def test_hvc_state_validates_proc():
    with pytest.raises(ValueError):
        HvcState(proc=3, n=2)


def test_hvc_receive_absorbs_sender_knowledge():
    cfg = ClockConfig()
    a = HvcState(proc=0, n=3)
    b = HvcState(proc=1, n=3)
    sent = hvc_update(a, 4, cfg)
    got = hvc_update(b, 5, cfg, msg=sent)
    assert got.entries[0] == sent.entries[0]
    assert got.entries[1] == got.own_hlc.l
    assert got.entries[2] == 0


def test_hvc_dominates_along_message_causality():
    """If e reaches f through program order and messages, f's vector
    dominates e's entry for e's process."""
    rng = random.Random(20)
    for _ in range(25):
        trace = oracles.random_tiny_trace(rng, n_max=4, max_events=30)
        cfg = ClockConfig(c_max=trace.c_max)
        states = [HvcState(proc=i, n=trace.n) for i in range(trace.n)]
        sent: dict[int, object] = {}
        stamps = {}
        for ev in trace.events:
            if ev.kind == "recv":
                stamp = hvc_update(states[ev.proc], ev.pt, cfg, msg=sent[ev.msg_id])
            else:
                stamp = hvc_update(states[ev.proc], ev.pt, cfg)
                if ev.kind == "send":
                    sent[ev.msg_id] = stamp
            stamps[(ev.proc, ev.seq)] = stamp
        order = oracles.brute_happened_before(trace, with_skew_rule=False)
        for (ea, eb) in order:
            va, vb = stamps[ea], stamps[eb]
            assert vb.entries[ea[0]] >= va.own_hlc.l
            assert all(x >= y for x, y in zip(vb.entries, va.entries))
