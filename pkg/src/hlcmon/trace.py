"""Trace records and their on-disk formats.

A trace is a header line followed by one JSON object per event. The
header echoes the generating configuration so a trace file is
self-describing. Event objects carry exactly the fields ``seq, proc,
kind, pt, l, c, var, val, msg_id``; fields that do not apply are null.

Derived from the events, an interval is a maximal span during which one
variable of one process held a constant value. Interval ends are
exclusive; an open interval runs to the end of the trace.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import IO, Iterable

from .clock import DEFAULT_C_MAX, HlcTimestamp

FORMAT_VERSION = "hlcmon-trace/1"

_EVENT_FIELDS = ("seq", "proc", "kind", "pt", "l", "c", "var", "val", "msg_id")
_KINDS = ("local", "send", "recv")


class TraceFormatError(ValueError):
    """Raised when a trace file violates the format contract."""


@dataclass(frozen=True, slots=True)
class Event:
    seq: int
    proc: int
    kind: str
    pt: int
    ts: HlcTimestamp
    var: str | None = None
    val: bool | int | None = None
    msg_id: int | None = None


@dataclass(frozen=True, slots=True)
class Interval:
    """Constant-value span of one variable on one process.

    ``end`` is exclusive; ``None`` means the value still held when the
    trace ended.
    """

    proc: int
    var: str
    value: bool | int
    start: HlcTimestamp
    end: HlcTimestamp | None

    def contains(self, t: HlcTimestamp) -> bool:
        return self.start <= t and (self.end is None or t < self.end)


@dataclass(frozen=True, slots=True)
class Message:
    msg_id: int
    sender: int
    receiver: int
    send_ts: HlcTimestamp
    recv_ts: HlcTimestamp


@dataclass
class Trace:
    config: dict
    events: list[Event]

    @property
    def n(self) -> int:
        return int(self.config["n"])

    @property
    def epsilon(self) -> int:
        return int(self.config["epsilon"])

    @property
    def c_max(self) -> int:
        return int(self.config.get("c_max", DEFAULT_C_MAX))

    def events_by_proc(self) -> list[list[Event]]:
        out: list[list[Event]] = [[] for _ in range(self.n)]
        for ev in self.events:
            out[ev.proc].append(ev)
        return out

    def messages(self) -> list[Message]:
        """Pair each send with its receive; unreceived sends are dropped."""
        sends: dict[int, Event] = {}
        out: list[Message] = []
        for ev in self.events:
            if ev.kind == "send":
                sends[ev.msg_id] = ev
            elif ev.kind == "recv":
                s = sends[ev.msg_id]
                out.append(Message(ev.msg_id, s.proc, ev.proc, s.ts, ev.ts))
        return out

    def max_l(self) -> int:
        top = 0
        for ev in self.events:
            if ev.ts.l > top:
                top = ev.ts.l
        return top


def _event_to_obj(ev: Event) -> dict:
    return {
        "seq": ev.seq,
        "proc": ev.proc,
        "kind": ev.kind,
        "pt": ev.pt,
        "l": ev.ts.l,
        "c": ev.ts.c,
        "var": ev.var,
        "val": ev.val,
        "msg_id": ev.msg_id,
    }


def encode_trace(trace: Trace, out: IO[str]) -> None:
    header = {"format": FORMAT_VERSION, "config": trace.config}
    out.write(json.dumps(header, separators=(",", ":")) + "\n")
    for ev in trace.events:
        out.write(json.dumps(_event_to_obj(ev), separators=(",", ":")) + "\n")


def dumps_trace(trace: Trace) -> str:
    buf = io.StringIO()
    encode_trace(trace, buf)
    return buf.getvalue()


def write_trace(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        encode_trace(trace, fh)


def decode_trace(lines: Iterable[str]) -> Trace:
    it = iter(enumerate(lines, start=1))
    try:
        _, first = next(it)
    except StopIteration:
        raise TraceFormatError("empty trace: missing header line") from None
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"line 1: malformed header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_VERSION:
        raise TraceFormatError(f"line 1: expected format {FORMAT_VERSION!r}")
    config = header.get("config")
    if not isinstance(config, dict):
        raise TraceFormatError("line 1: header missing config echo")

    events: list[Event] = []
    last_seq: dict[int, int] = {}
    open_sends: set[int] = set()
    for lineno, raw in it:
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line {lineno}: malformed event: {exc}") from None
        missing = [k for k in _EVENT_FIELDS if k not in obj]
        if missing:
            raise TraceFormatError(f"line {lineno}: missing fields {missing}")
        kind = obj["kind"]
        if kind not in _KINDS:
            raise TraceFormatError(f"line {lineno}: unknown event kind {kind!r}")
        proc = obj["proc"]
        seq = obj["seq"]
        if proc in last_seq and seq <= last_seq[proc]:
            raise TraceFormatError(
                f"line {lineno}: seq {seq} does not increase for process {proc}"
            )
        last_seq[proc] = seq
        msg_id = obj["msg_id"]
        if kind == "send":
            if msg_id is None:
                raise TraceFormatError(f"line {lineno}: send without msg_id")
            if msg_id in open_sends:
                raise TraceFormatError(f"line {lineno}: duplicate msg_id {msg_id}")
            open_sends.add(msg_id)
        elif kind == "recv":
            if msg_id is None or msg_id not in open_sends:
                raise TraceFormatError(f"line {lineno}: unmatched msg_id {msg_id!r}")
            open_sends.discard(msg_id)
        events.append(
            Event(
                seq=seq,
                proc=proc,
                kind=kind,
                pt=obj["pt"],
                ts=HlcTimestamp(obj["l"], obj["c"]),
                var=obj["var"],
                val=obj["val"],
                msg_id=msg_id,
            )
        )
    return Trace(config=config, events=events)


def read_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        return decode_trace(fh)


GENESIS = HlcTimestamp(0, 0)


def value_tiling(
    trace: Trace, var: str, default: bool | int = False
) -> list[list[Interval]]:
    """Per-process constant-value intervals of ``var``, in time order.

    Every process is covered from the zero timestamp onward: the span
    before its first change carries ``default``, and the last value
    yields an open interval.  Window checking and value-selection
    monitors need this total coverage so a variable has a defined value
    at every timestamp they probe.
    """
    out: list[list[Interval]] = []
    for proc_events in trace.events_by_proc():
        spans: list[Interval] = []
        cur_val: bool | int = default
        cur_start = GENESIS
        proc = proc_events[0].proc if proc_events else len(out)
        for ev in proc_events:
            proc = ev.proc
            if ev.var != var:
                continue
            if ev.val == cur_val:
                continue
            spans.append(Interval(proc, var, cur_val, cur_start, ev.ts))
            cur_val = ev.val
            cur_start = ev.ts
        spans.append(Interval(proc, var, cur_val, cur_start, None))
        out.append(spans)
    return out


def extract_intervals(trace: Trace, var: str) -> list[list[Interval]]:
    """Per-process spans during which a boolean variable held true.

    A variable that never changes yields an empty list for that
    process; a final set-to-true with no reset yields an open interval.
    """
    return [
        [iv for iv in per_proc if iv.value is True]
        for per_proc in value_tiling(trace, var, default=False)
    ]


INTERVAL_CSV_HEADER = "proc,var,val,start_l,start_c,end_l,end_c,open"


def intervals_to_csv(intervals: Iterable[Interval]) -> str:
    lines = [INTERVAL_CSV_HEADER]
    for iv in intervals:
        val = int(iv.value) if isinstance(iv.value, bool) else iv.value
        if iv.end is None:
            end_l = end_c = ""
            is_open = 1
        else:
            end_l, end_c = iv.end.l, iv.end.c
            is_open = 0
        lines.append(
            f"{iv.proc},{iv.var},{val},{iv.start.l},{iv.start.c},{end_l},{end_c},{is_open}"
        )
    return "\n".join(lines) + "\n"
