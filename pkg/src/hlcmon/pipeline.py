"""End-to-end detection pipeline and scoring.

The run proceeds in batches of windows. In ``two_layer`` mode the
cheap stretched-interval monitor runs over each batch's span first and
only the windows it marks go to the exact per-window solver; in
``single_layer`` mode every window is solved. Reports are
deterministic: wall-clock fields stay zero unless timing is requested.
"""

from __future__ import annotations

import time
from bisect import bisect_left
from dataclasses import dataclass, field

from .clock import ClockConfig, HlcTimestamp, successor
from .monitor import (
    Conjunctive,
    LessThan,
    MonitorConfig,
    Predicate,
    Segment,
    SumGreater,
    SumLess,
    UnsupportedPredicateError,
    detect,
    gamma_extend,
    mark_windows,
)
from .trace import Trace, extract_intervals, value_tiling
from .window_checker import WindowContext, WitnessModel, solve

Region = tuple[HlcTimestamp, "HlcTimestamp | None"]

_INF = HlcTimestamp(2**63, 0)


@dataclass
class PipelineConfig:
    predicate: Predicate
    gamma: int
    window: int | None = None
    batch: int = 100
    mode: str = "two_layer"
    timing: bool = False
    allow_excess_gamma: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("two_layer", "single_layer"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.batch < 1:
            raise ValueError("batch must be positive")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be positive")


@dataclass
class BatchStats:
    first_window: int
    last_window: int
    marked: int
    solver_calls: int
    confirmed: int


@dataclass
class RunReport:
    mode: str
    gamma: int
    window: int
    epsilon: int
    total_windows: int
    marked_windows: int
    solver_calls: int
    confirmed: list[WitnessModel]
    batches: list[BatchStats] = field(default_factory=list)
    layer1_ms: float = 0.0
    layer2_ms: float = 0.0


def monitor_segments(
    trace: Trace, predicate: Predicate, gamma: int, *, allow_excess: bool = False
) -> list[list[Segment]]:
    """Gamma-stretched candidate segments feeding the first layer.

    Conjunctive detection works from the true-spans of the flag
    variable; value-selection predicates get a full default-completed
    tiling so the candidate sweep sees a defined value everywhere.  For
    the two-sided comparison predicate, uninvolved processes carry the
    left side's variable, which only provides coverage.
    """
    cfg = MonitorConfig(gamma, trace.c_max, trace.epsilon, allow_excess=allow_excess)
    n = trace.n
    if isinstance(predicate, Conjunctive):
        per_var = {predicate.var: extract_intervals(trace, predicate.var)}
        chosen = [predicate.var] * n
    elif isinstance(predicate, (SumGreater, SumLess)):
        per_var = {predicate.var: value_tiling(trace, predicate.var, default=0)}
        chosen = [predicate.var] * n
    elif isinstance(predicate, LessThan):
        lp, lv = predicate.left
        rp, rv = predicate.right
        per_var = {v: value_tiling(trace, v, default=0) for v in {lv, rv}}
        chosen = [lv] * n
        chosen[int(lp)] = lv
        chosen[int(rp)] = rv
    else:
        raise UnsupportedPredicateError(f"unsupported predicate {predicate!r}")
    per_proc = [per_var[chosen[i]][i] for i in range(n)]
    return gamma_extend(per_proc, gamma, cfg)


def _clip(segs: list[Segment], lo: HlcTimestamp, hi: HlcTimestamp) -> list[Segment]:
    starts = [s.start for s in segs]
    stop = bisect_left(starts, hi)
    return [
        s for s in segs[:stop] if s.end is None or s.end > lo
    ]


def run_two_layer(trace: Trace, cfg: PipelineConfig) -> RunReport:
    eps = trace.epsilon
    w = cfg.window if cfg.window is not None else eps
    ctx = WindowContext(trace, cfg.predicate, window=w)
    total = ctx.total_windows
    mon_cfg = MonitorConfig(
        cfg.gamma, trace.c_max, eps, allow_excess=cfg.allow_excess_gamma
    )
    segments = (
        monitor_segments(
            trace, cfg.predicate, cfg.gamma, allow_excess=cfg.allow_excess_gamma
        )
        if cfg.mode == "two_layer"
        else None
    )

    report = RunReport(
        mode=cfg.mode,
        gamma=cfg.gamma,
        window=w,
        epsilon=eps,
        total_windows=total,
        marked_windows=0,
        solver_calls=0,
        confirmed=[],
    )
    t_layer1 = 0.0
    t_layer2 = 0.0
    for first in range(0, total, cfg.batch):
        last = min(first + cfg.batch, total) - 1
        if segments is not None:
            t0 = time.perf_counter()
            lo = HlcTimestamp(first * w, 0)
            hi = HlcTimestamp((last + 1) * w + eps + 1, 0)
            local = [_clip(segs, lo, hi) for segs in segments]
            dets = detect(local, cfg.predicate, mon_cfg)
            marked = [
                k for k in mark_windows(dets, w, eps, total) if first <= k <= last
            ]
            t_layer1 += time.perf_counter() - t0
        else:
            marked = list(range(first, last + 1))
        t0 = time.perf_counter()
        confirmed_here = 0
        for k in marked:
            model = solve(ctx.constraints(k))
            report.solver_calls += 1
            if model is not None:
                report.confirmed.append(model)
                confirmed_here += 1
        t_layer2 += time.perf_counter() - t0
        report.marked_windows += len(marked)
        report.batches.append(
            BatchStats(first, last, len(marked), len(marked), confirmed_here)
        )
    if cfg.timing:
        report.layer1_ms = t_layer1 * 1000.0
        report.layer2_ms = t_layer2 * 1000.0
    return report


@dataclass
class Score:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float | None:
        denom = self.tp + self.fp
        return None if denom == 0 else self.tp / denom

    @property
    def recall(self) -> float | None:
        denom = self.tp + self.fn
        return None if denom == 0 else self.tp / denom


def _end_key(end: HlcTimestamp | None) -> HlcTimestamp:
    return _INF if end is None else end


def regions_overlap(a: Region, b: Region) -> bool:
    return a[0] < _end_key(b[1]) and b[0] < _end_key(a[1])


def _count_unmatched(queries: list[Region], targets: list[Region]) -> int:
    """How many queries overlap no target at all."""
    targets = sorted(targets, key=lambda r: (r[0], _end_key(r[1])))
    starts = [r[0] for r in targets]
    reach: list[HlcTimestamp] = []
    best = None
    for r in targets:
        e = _end_key(r[1])
        best = e if best is None or e > best else best
        reach.append(best)
    misses = 0
    for q in queries:
        idx = bisect_left(starts, _end_key(q[1]))
        if idx == 0 or reach[idx - 1] <= q[0]:
            misses += 1
    return misses


def score(reported: list[Region], truth: list[Region]) -> Score:
    """Score reported regions against reference regions.

    False positives are reported regions overlapping no reference
    region and false negatives the converse; both are independent
    overlap tests. True positives come from a one-to-one greedy match
    in time order, so duplicates of an already-claimed reference do not
    add credit.
    """
    fp = _count_unmatched(reported, truth)
    fn = _count_unmatched(truth, reported)
    rep = sorted(reported, key=lambda r: (r[0], _end_key(r[1])))
    tru = sorted(truth, key=lambda r: (r[0], _end_key(r[1])))
    tp = 0
    i = 0
    for r in rep:
        while i < len(tru) and _end_key(tru[i][1]) <= r[0]:
            i += 1
        if i < len(tru) and tru[i][0] < _end_key(r[1]):
            tp += 1
            i += 1
    return Score(tp, fp, fn)


def detection_regions(detections) -> list[Region]:
    return [(d.start, d.end) for d in detections]


def snapshot_regions(snapshots) -> list[Region]:
    return [(s.region_start, s.region_end) for s in snapshots]


def witness_regions(models: list[WitnessModel], c_max: int) -> list[Region]:
    cfg = ClockConfig(c_max=c_max)
    out: list[Region] = []
    for m in models:
        out.append((min(m.times), successor(max(m.times), cfg)))
    return out


METRICS_FORMAT = "hlcmon-metrics/1"

_METRIC_COLUMNS = (
    "workload,n,epsilon,alpha,beta,delta,ell,steps,seed,gamma,"
    "tp,fp,fn,precision,recall,marked_windows,total_windows,"
    "layer1_ms,layer2_ms,solver_calls"
)


def metrics_header() -> str:
    return f"# {METRICS_FORMAT}\n{_METRIC_COLUMNS}\n"


def _ratio(x: float | None) -> str:
    return "NA" if x is None else f"{x:.6f}"


def metrics_row(config: dict, gamma: int, sc: Score, report: RunReport) -> str:
    lead = ",".join(
        str(config.get(key, ""))
        for key in (
            "workload",
            "n",
            "epsilon",
            "alpha",
            "beta",
            "delta",
            "ell",
            "steps",
            "seed",
        )
    )
    return (
        f"{lead},{gamma},{sc.tp},{sc.fp},{sc.fn},"
        f"{_ratio(sc.precision)},{_ratio(sc.recall)},"
        f"{report.marked_windows},{report.total_windows},"
        f"{report.layer1_ms:.3f},{report.layer2_ms:.3f},{report.solver_calls}\n"
    )
