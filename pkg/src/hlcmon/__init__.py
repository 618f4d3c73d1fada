"""Runtime detection of distributed predicates under bounded clock skew.

Two cooperating layers: a cheap monitor that stretches value intervals
by a slack ``gamma`` on hybrid logical clocks and flags candidate
regions, and an exact per-window constraint solver that confirms them.
A reference detector provides exact results for scoring.
"""

from .clock import (
    ClockConfig,
    CounterOverflowError,
    DEFAULT_C_MAX,
    HlcState,
    HlcTimestamp,
    HvcState,
    HvcTimestamp,
    hlc_compare,
    hlc_extend,
    hlc_local,
    hlc_recv,
    hvc_merge,
    hvc_update,
    successor,
)
from .ground_truth import (
    CausalOrder,
    Snapshot,
    detect_all_valid,
    detect_mutex_violations,
    happened_before,
)
from .monitor import (
    Conjunctive,
    Detection,
    LessThan,
    MonitorConfig,
    Predicate,
    Segment,
    SumGreater,
    SumLess,
    UnsupportedPredicateError,
    detect,
    gamma_extend,
    format_predicate,
    mark_windows,
    parse_predicate,
)
from .pipeline import (
    PipelineConfig,
    RunReport,
    Score,
    metrics_header,
    metrics_row,
    monitor_segments,
    run_two_layer,
    score,
)
from .sim import SimConfig, TdmConfig, simulate_conjunctive, simulate_tdm
from .trace import (
    Event,
    GENESIS,
    Interval,
    Message,
    Trace,
    TraceFormatError,
    decode_trace,
    dumps_trace,
    extract_intervals,
    read_trace,
    value_tiling,
    write_trace,
)
from .window_checker import (
    ConstraintSet,
    WindowContext,
    WitnessModel,
    build_constraints,
    emit_smtlib,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "ClockConfig",
    "CounterOverflowError",
    "DEFAULT_C_MAX",
    "HlcState",
    "HlcTimestamp",
    "HvcState",
    "HvcTimestamp",
    "hlc_compare",
    "hlc_extend",
    "hlc_local",
    "hlc_recv",
    "hvc_merge",
    "hvc_update",
    "successor",
    "CausalOrder",
    "Snapshot",
    "detect_all_valid",
    "detect_mutex_violations",
    "happened_before",
    "Conjunctive",
    "Detection",
    "LessThan",
    "MonitorConfig",
    "Predicate",
    "Segment",
    "SumGreater",
    "SumLess",
    "UnsupportedPredicateError",
    "detect",
    "gamma_extend",
    "mark_windows",
    "parse_predicate",
    "format_predicate",
    "PipelineConfig",
    "RunReport",
    "Score",
    "metrics_header",
    "metrics_row",
    "monitor_segments",
    "run_two_layer",
    "score",
    "SimConfig",
    "TdmConfig",
    "simulate_conjunctive",
    "simulate_tdm",
    "Event",
    "GENESIS",
    "Interval",
    "Message",
    "Trace",
    "TraceFormatError",
    "decode_trace",
    "dumps_trace",
    "extract_intervals",
    "read_trace",
    "value_tiling",
    "write_trace",
    "ConstraintSet",
    "WindowContext",
    "WitnessModel",
    "build_constraints",
    "emit_smtlib",
    "solve",
]
