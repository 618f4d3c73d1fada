"""Exact reference detection, used to score the approximate layers.

Happened-before here is the transitive closure of three edge kinds:
program order, send to receive, and the skew rule that an event
precedes any event whose physical time is more than ``epsilon`` ahead.

A valid snapshot assigns one timestamp per process such that all
timestamps lie within ``epsilon`` of each other in ``l``, no message is
received at or before a chosen timestamp unless it was also sent
strictly before the sender's chosen timestamp, and the predicate holds
on the values in effect. The detector scans candidate intervals in
time order, raising per-process pointers to the least tuple that
clears every pairwise constraint, which yields the earliest valid
snapshot; after recording one it consumes the involved intervals and
continues past the witness point, so successive witnesses never share
an interval.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass

from .clock import ClockConfig, HlcTimestamp, successor
from .monitor import Conjunctive, Predicate, UnsupportedPredicateError
from .trace import Event, GENESIS, Interval, Trace, extract_intervals


class CausalOrder:
    """Event reachability over one trace.

    One pass in file order computes, for every event, the largest
    per-process sequence number among its causal ancestors. File order
    must be a linear extension of happened-before, which holds for any
    trace whose clocks respect the skew bound (the decoder already
    forces per-process and send-before-receive order).
    """

    def __init__(self, trace: Trace) -> None:
        n = trace.n
        eps = trace.epsilon
        self.n = n
        self._know: dict[tuple[int, int], list[int]] = {}
        proc_pts: list[list[int]] = [[] for _ in range(n)]
        proc_keys: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        send_key: dict[int, tuple[int, int]] = {}
        for ev in trace.events:
            vec = [-1] * n
            preds: list[tuple[int, int]] = []
            if proc_keys[ev.proc]:
                preds.append(proc_keys[ev.proc][-1])
            if ev.kind == "recv":
                preds.append(send_key[ev.msg_id])
            for p in range(n):
                # latest event on p more than eps behind in physical time
                j = bisect_left(proc_pts[p], ev.pt - eps)
                if j > 0:
                    preds.append(proc_keys[p][j - 1])
            for key in preds:
                kv = self._know[key]
                for q in range(n):
                    if kv[q] > vec[q]:
                        vec[q] = kv[q]
            vec[ev.proc] = ev.seq
            key = (ev.proc, ev.seq)
            self._know[key] = vec
            proc_pts[ev.proc].append(ev.pt)
            proc_keys[ev.proc].append(key)
            if ev.kind == "send":
                send_key[ev.msg_id] = key

    def happened_before(self, e: Event, f: Event) -> bool:
        if e.proc == f.proc:
            return e.seq < f.seq
        return self._know[(f.proc, f.seq)][e.proc] >= e.seq

    def concurrent(self, e: Event, f: Event) -> bool:
        return not self.happened_before(e, f) and not self.happened_before(f, e)


def happened_before(trace: Trace, e: Event, f: Event) -> bool:
    order = getattr(trace, "_causal_order", None)
    if order is None:
        order = CausalOrder(trace)
        trace._causal_order = order
    return order.happened_before(e, f)


@dataclass(frozen=True, slots=True)
class Snapshot:
    """One valid snapshot.

    ``times`` has one timestamp per process. ``intervals`` holds the
    predicate interval each constrained process contributed and
    ``interval_indices`` its position in that process's interval list
    (``None`` for processes the predicate does not constrain).
    ``point`` is the latest constrained timestamp: the moment the
    snapshot completes and the restart frontier. The region runs from
    ``point`` to the earliest contributing interval end plus the skew
    bound (``None`` if every contributing interval is open), which is
    the span a skew-respecting monitor could still attribute this
    snapshot to; scoring matches on region overlap.
    """

    times: tuple[HlcTimestamp, ...]
    intervals: tuple[Interval | None, ...]
    interval_indices: tuple[int | None, ...]
    point: HlcTimestamp
    region_start: HlcTimestamp
    region_end: HlcTimestamp | None


class _PairMessages:
    """Per sender-receiver message tables for constraint queries."""

    def __init__(self, trace: Trace, c_max: int) -> None:
        n = trace.n
        self._cfg = ClockConfig(c_max=c_max)
        raw: list[list[list[tuple[HlcTimestamp, HlcTimestamp]]]] = [
            [[] for _ in range(n)] for _ in range(n)
        ]
        for m in trace.messages():
            raw[m.sender][m.receiver].append((m.send_ts, m.recv_ts))
        self._by_ts: list[list[tuple | None]] = [[None] * n for _ in range(n)]
        self._by_tr: list[list[tuple | None]] = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                pairs = raw[a][b]
                if not pairs:
                    continue
                by_ts = sorted(pairs)
                ts_keys = [p[0] for p in by_ts]
                sufmin: list[HlcTimestamp] = [p[1] for p in by_ts]
                for i in range(len(sufmin) - 2, -1, -1):
                    if sufmin[i + 1] < sufmin[i]:
                        sufmin[i] = sufmin[i + 1]
                by_tr = sorted(pairs, key=lambda p: (p[1], p[0]))
                tr_keys = [p[1] for p in by_tr]
                prefmax: list[HlcTimestamp] = [p[0] for p in by_tr]
                for i in range(1, len(prefmax)):
                    if prefmax[i - 1] > prefmax[i]:
                        prefmax[i] = prefmax[i - 1]
                self._by_ts[a][b] = (ts_keys, sufmin)
                self._by_tr[a][b] = (tr_keys, prefmax)

    def forced_bound(
        self, a: int, b: int, ta: HlcTimestamp, tb: HlcTimestamp
    ) -> HlcTimestamp | None:
        """If some message a->b was received by ``tb`` but not sent before
        ``ta``, return the least sound new value for ``ta``."""
        ent = self._by_ts[a][b]
        if ent is None:
            return None
        ts_keys, sufmin = ent
        i = bisect_left(ts_keys, ta)
        if i == len(ts_keys) or sufmin[i] > tb:
            return None
        tr_keys, prefmax = self._by_tr[a][b]
        k = bisect_right(tr_keys, tb) - 1
        return successor(prefmax[k], self._cfg)


def _scan(
    n: int,
    queues: list[list[Interval]],
    constrained: list[bool],
    msgs: _PairMessages,
    eps: int,
    c_max: int,
) -> list[Snapshot]:
    cfg = ClockConfig(c_max=c_max)
    for i in range(n):
        if not queues[i]:
            return []
    heads = [0] * n
    t: list[HlcTimestamp] = [queues[i][0].start for i in range(n)]
    witnesses: list[Snapshot] = []

    def raise_to(i: int, target: HlcTimestamp) -> bool:
        while True:
            iv = queues[i][heads[i]]
            if iv.end is None or target < iv.end:
                t[i] = target if target > iv.start else iv.start
                return True
            heads[i] += 1
            if heads[i] >= len(queues[i]):
                return False

    def check_pair(i: int, j: int) -> tuple[int, HlcTimestamp] | None:
        ti, tj = t[i], t[j]
        if ti.l + eps < tj.l:
            return i, HlcTimestamp(tj.l - eps, 0)
        if tj.l + eps < ti.l:
            return j, HlcTimestamp(ti.l - eps, 0)
        bound = msgs.forced_bound(i, j, ti, tj)
        if bound is not None:
            return i, bound
        bound = msgs.forced_bound(j, i, tj, ti)
        if bound is not None:
            return j, bound
        return None

    work: deque[int] = deque(range(n))
    queued = [True] * n

    def push(p: int) -> None:
        if not queued[p]:
            work.append(p)
            queued[p] = True

    while True:
        if work:
            i = work.popleft()
            queued[i] = False
            for j in range(n):
                if j == i:
                    continue
                hit = check_pair(i, j)
                if hit is not None:
                    p, target = hit
                    if not raise_to(p, target):
                        return witnesses
                    push(p)
                    push(i)
                    break
            continue
        # settle check: one full pass before recording
        clean = True
        for i in range(n):
            for j in range(i + 1, n):
                hit = check_pair(i, j)
                if hit is not None:
                    p, target = hit
                    if not raise_to(p, target):
                        return witnesses
                    push(p)
                    clean = False
                    break
            if not clean:
                break
        if not clean:
            continue

        c_times = [t[i] for i in range(n) if constrained[i]]
        point = max(c_times)
        ivs = tuple(
            queues[i][heads[i]] if constrained[i] else None for i in range(n)
        )
        idxs = tuple(heads[i] if constrained[i] else None for i in range(n))
        ends = [iv.end for iv in ivs if iv is not None and iv.end is not None]
        region_end: HlcTimestamp | None = None
        if ends:
            region_end = HlcTimestamp(min(ends).l + eps, c_max)
            if region_end <= point:
                region_end = successor(point, cfg)
        witnesses.append(Snapshot(tuple(t), ivs, idxs, point, point, region_end))
        for i in range(n):
            if not constrained[i]:
                continue
            heads[i] += 1
            q = queues[i]
            while heads[i] < len(q) and q[heads[i]].start < point:
                heads[i] += 1
            if heads[i] >= len(q):
                return witnesses
            t[i] = q[heads[i]].start
        work = deque(range(n))
        queued = [True] * n


def detect_all_valid(
    trace: Trace,
    predicate: Predicate = Conjunctive("v"),
    *,
    intervals: list[list[Interval]] | None = None,
    epsilon: int | None = None,
) -> list[Snapshot]:
    """All non-overlapping valid snapshots of a conjunctive predicate."""
    if not isinstance(predicate, Conjunctive):
        raise UnsupportedPredicateError(
            "exact detection handles conjunctive predicates only"
        )
    eps = trace.epsilon if epsilon is None else epsilon
    queues = extract_intervals(trace, predicate.var) if intervals is None else intervals
    msgs = _PairMessages(trace, trace.c_max)
    return _scan(
        trace.n, [list(q) for q in queues], [True] * trace.n, msgs, eps, trace.c_max
    )


def detect_mutex_violations(
    trace: Trace, var: str = "v", epsilon: int | None = None
) -> list[Snapshot]:
    """All non-overlapping snapshots where two booleans hold at once.

    This is the exact reference for ``sum(v) > 1`` over boolean
    variables: some pair of processes must hold simultaneously, with
    every other process free to sit at any consistent timestamp. Each
    pair is scanned separately and overlapping pair witnesses merge
    into one.
    """
    eps = trace.epsilon if epsilon is None else epsilon
    n = trace.n
    tiv = extract_intervals(trace, var)
    msgs = _PairMessages(trace, trace.c_max)
    found: list[Snapshot] = []
    for i in range(n):
        for j in range(i + 1, n):
            queues: list[list[Interval]] = []
            constrained = [False] * n
            for k in range(n):
                if k in (i, j):
                    queues.append(list(tiv[k]))
                    constrained[k] = True
                else:
                    queues.append([Interval(k, var, True, GENESIS, None)])
            found.extend(_scan(n, queues, constrained, msgs, eps, trace.c_max))
    found.sort(key=lambda s: (s.region_start, s.point))
    merged: list[Snapshot] = []
    for snap in found:
        if merged and _regions_overlap(merged[-1], snap):
            prev = merged[-1]
            end = None
            if prev.region_end is not None and snap.region_end is not None:
                end = max(prev.region_end, snap.region_end)
            merged[-1] = Snapshot(
                prev.times,
                prev.intervals,
                prev.interval_indices,
                prev.point,
                prev.region_start,
                end,
            )
        else:
            merged.append(snap)
    return merged


def _regions_overlap(a: Snapshot, b: Snapshot) -> bool:
    a_end_ok = a.region_end is None or b.region_start < a.region_end
    b_end_ok = b.region_end is None or a.region_start < b.region_end
    return a_end_ok and b_end_ok
