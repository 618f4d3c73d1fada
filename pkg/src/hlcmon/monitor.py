"""First detection layer: interval extension and overlap search.

Clock skew makes interval endpoints untrustworthy by up to the skew
bound, so each constant-value interval is stretched by ``gamma`` ticks
past its end before looking for overlaps. Where a stretched interval
runs into its successor the variable is treated as multi-valued: either
the old or the new value may have held there, and the detector picks
whichever candidate can satisfy the predicate. Stretching by the full
skew bound therefore never misses a real overlap; smaller ``gamma``
trades false negatives for fewer false positives.

Each detection is a maximal span over which one fixed combination of
stretched intervals keeps the predicate satisfiable. Detections feed
the second layer by marking the fixed-size windows they touch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .clock import ClockConfig, DEFAULT_C_MAX, HlcTimestamp, hlc_extend
from .trace import Interval


@dataclass(frozen=True, slots=True)
class Conjunctive:
    """Every process's boolean ``var`` is true."""

    var: str = "v"


@dataclass(frozen=True, slots=True)
class SumGreater:
    """Sum of ``var`` across processes exceeds ``limit``."""

    var: str = "v"
    limit: int = 1


@dataclass(frozen=True, slots=True)
class SumLess:
    var: str = "v"
    limit: int = 1


@dataclass(frozen=True, slots=True)
class LessThan:
    """``left`` variable is less than ``right`` variable.

    Each side names a (process, variable) pair.
    """

    left: tuple[int, str] = (0, "x")
    right: tuple[int, str] = (1, "x")


Predicate = Union[Conjunctive, SumGreater, SumLess, LessThan]


class UnsupportedPredicateError(ValueError):
    pass


def parse_predicate(text: str) -> Predicate:
    """Parse CLI syntax: conj:v, sum_gt:v:1, sum_lt:v:10, lt:0.x:1.y"""
    parts = text.split(":")
    try:
        if parts[0] == "conj" and len(parts) == 2:
            return Conjunctive(parts[1])
        if parts[0] == "sum_gt" and len(parts) == 3:
            return SumGreater(parts[1], int(parts[2]))
        if parts[0] == "sum_lt" and len(parts) == 3:
            return SumLess(parts[1], int(parts[2]))
        if parts[0] == "lt" and len(parts) == 3:
            lp, lv = parts[1].split(".", 1)
            rp, rv = parts[2].split(".", 1)
            return LessThan((int(lp), lv), (int(rp), rv))
    except ValueError as exc:
        raise UnsupportedPredicateError(f"bad predicate {text!r}: {exc}") from None
    raise UnsupportedPredicateError(f"bad predicate {text!r}")


def format_predicate(predicate: Predicate) -> str:
    """Inverse of parse_predicate, used to echo predicates in reports."""
    if isinstance(predicate, Conjunctive):
        return f"conj:{predicate.var}"
    if isinstance(predicate, SumGreater):
        return f"sum_gt:{predicate.var}:{predicate.limit}"
    if isinstance(predicate, SumLess):
        return f"sum_lt:{predicate.var}:{predicate.limit}"
    if isinstance(predicate, LessThan):
        lp, lv = predicate.left
        rp, rv = predicate.right
        return f"lt:{lp}.{lv}:{rp}.{rv}"
    raise UnsupportedPredicateError(f"unsupported predicate {predicate!r}")


@dataclass
class MonitorConfig:
    """Knobs for the stretched-interval layer.

    ``epsilon`` is optional so interval-level helpers can run without a
    trace at hand, but when it is known the stretch must not exceed it:
    stretching past the clock-skew bound admits states that cannot be
    ruled out later, so it is rejected unless ``allow_excess`` is set
    (useful when the deployed skew bound is itself a guess).
    """

    gamma: int
    c_max: int = DEFAULT_C_MAX
    epsilon: int | None = None
    allow_excess: bool = False

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if (
            self.epsilon is not None
            and self.gamma > self.epsilon
            and not self.allow_excess
        ):
            raise ValueError(
                f"gamma {self.gamma} exceeds epsilon {self.epsilon}; "
                "pass allow_excess to permit this"
            )


@dataclass(frozen=True, slots=True)
class Segment:
    """Span where a variable's candidate value set is constant.

    ``end`` is exclusive and ``None`` means unbounded. ``values`` holds
    every value the variable may have had in the span once intervals are
    stretched; ``sources`` are the indices of the contributing
    intervals.
    """

    start: HlcTimestamp
    end: HlcTimestamp | None
    values: frozenset
    sources: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Detection:
    """Span where one interval combination could satisfy the predicate.

    ``contributing`` lists, per process, the interval indices whose
    stretched spans supplied the region's candidate values;
    ``predicate`` echoes the monitored predicate in CLI syntax.
    """

    start: HlcTimestamp
    end: HlcTimestamp | None
    contributing: tuple[tuple[int, ...], ...]
    predicate: str = ""


def gamma_extend(
    per_proc: Sequence[Sequence[Interval]], gamma: int, cfg: MonitorConfig
) -> list[list[Segment]]:
    """Stretch every interval end by ``gamma`` and resegment per process.

    Input intervals per process must be in time order. Output segments
    tile the process timeline; where stretched intervals overlap their
    successors the segment carries all candidate values.
    """
    clock_cfg = ClockConfig(c_max=cfg.c_max)
    out: list[list[Segment]] = []
    for ivs in per_proc:
        marks: list[tuple[HlcTimestamp, int, int]] = []
        open_ids: list[int] = []
        for idx, iv in enumerate(ivs):
            marks.append((iv.start, 1, idx))
            if iv.end is None:
                open_ids.append(idx)
            else:
                marks.append((hlc_extend(iv.end, gamma, clock_cfg), -1, idx))
        marks.sort(key=lambda m: (m[0], m[1]))
        segs: list[Segment] = []
        active: set[int] = set()
        pos = 0
        cur_start: HlcTimestamp | None = None
        while pos < len(marks):
            ts = marks[pos][0]
            if active and cur_start is not None and cur_start < ts:
                segs.append(_segment(ivs, active, cur_start, ts))
            while pos < len(marks) and marks[pos][0] == ts:
                _, kind, idx = marks[pos]
                if kind == 1:
                    active.add(idx)
                else:
                    active.discard(idx)
                pos += 1
            cur_start = ts
        if active and cur_start is not None:
            segs.append(_segment(ivs, active, cur_start, None))
        out.append(segs)
    return out


def _segment(ivs, active: set[int], start: HlcTimestamp, end: HlcTimestamp | None) -> Segment:
    ids = tuple(sorted(active))
    return Segment(start, end, frozenset(ivs[i].value for i in ids), ids)


def _could_hold(predicate: Predicate, values: Sequence[frozenset]) -> bool:
    """Whether some choice of candidate values satisfies the predicate."""
    if isinstance(predicate, Conjunctive):
        return all(True in vs for vs in values)
    if isinstance(predicate, SumGreater):
        return sum(max(map(int, vs)) for vs in values) > predicate.limit
    if isinstance(predicate, SumLess):
        return sum(min(map(int, vs)) for vs in values) < predicate.limit
    if isinstance(predicate, LessThan):
        li, ri = predicate.left[0], predicate.right[0]
        return min(map(int, values[li])) < max(map(int, values[ri]))
    raise UnsupportedPredicateError(f"unsupported predicate {predicate!r}")


def detect(
    extended: Sequence[Sequence[Segment]], predicate: Predicate, cfg: MonitorConfig
) -> list[Detection]:
    """Regions where the predicate could hold on extended segments.

    ``extended`` is the output of :func:`gamma_extend`; for
    :class:`LessThan` each referenced process's segments must describe
    its own side's variable. Each detection is the maximal span over
    which one fixed combination of contributing intervals keeps the
    predicate satisfiable; when the combination changes a new region
    starts, so region count tracks how many candidate witnesses the
    stretch admits. Successive detections never overlap.
    """
    n = len(extended)
    bounds: set[HlcTimestamp] = set()
    for segs in extended:
        for seg in segs:
            bounds.add(seg.start)
            if seg.end is not None:
                bounds.add(seg.end)
    order = sorted(bounds)
    ptrs = [0] * n
    regions: list[Detection] = []
    run_start: HlcTimestamp | None = None
    run_sources: tuple[tuple[int, ...], ...] = ()

    echo = format_predicate(predicate)

    def flush(end: HlcTimestamp | None) -> None:
        nonlocal run_start
        if run_start is not None:
            regions.append(Detection(run_start, end, run_sources, echo))
            run_start = None

    for ts in order:
        values: list[frozenset] = []
        here: list[tuple[int, ...]] = []
        ok = True
        for i in range(n):
            segs = extended[i]
            p = ptrs[i]
            while p < len(segs) and segs[p].end is not None and segs[p].end <= ts:
                p += 1
            ptrs[i] = p
            if p >= len(segs) or segs[p].start > ts:
                ok = False
                break
            values.append(segs[p].values)
            here.append(segs[p].sources)
        if ok and _could_hold(predicate, values):
            sources = tuple(here)
            if run_start is None:
                run_start, run_sources = ts, sources
            elif sources != run_sources:
                flush(ts)
                run_start, run_sources = ts, sources
        else:
            flush(ts)
    flush(None)
    return regions


def mark_windows(
    detections: Sequence[Detection], window_size: int, epsilon: int, total_windows: int
) -> list[int]:
    """Indices of windows whose span intersects some detection region.

    Window k spans l-values ``[k*w, (k+1)*w + epsilon]``, closed on both
    ends; only the ``l`` part of a timestamp decides membership.
    """
    w = window_size
    marked: set[int] = set()
    for det in detections:
        s_l = det.start.l
        if det.end is None:
            e_l = None
        else:
            e_l = det.end.l if det.end.c > 0 else det.end.l - 1
        lo_k = max(0, -(-(s_l - w - epsilon) // w))
        hi_k = total_windows - 1 if e_l is None else min(total_windows - 1, e_l // w)
        for k in range(lo_k, hi_k + 1):
            marked.add(k)
    return sorted(marked)
