"""Command line front end.

Subcommands cover the full workflow: ``simulate`` produces traces,
``detect-gamma`` runs the stretched-interval monitor, ``ground-truth``
runs the exact reference detector, ``two-layer`` runs the window
pipeline, ``emit-smt`` renders window constraint systems as SMT-LIB,
and ``sweep`` drives a parameter grid into a metrics CSV.

Exit status: 0 on success, 1 on a runtime failure (bad input file,
unsupported predicate), 2 on usage errors (from argparse).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from dataclasses import asdict

from . import ground_truth, pipeline, sim
from .monitor import (
    Conjunctive,
    MonitorConfig,
    SumGreater,
    UnsupportedPredicateError,
    detect,
    mark_windows,
    parse_predicate,
)
from .trace import Trace, TraceFormatError, dumps_trace, read_trace
from .window_checker import WindowContext, emit_smtlib


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", choices=("conjunctive", "tdm"), default="conjunctive")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--epsilon", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.02)
    p.add_argument("--delta", type=int, default=10)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tick-advance-prob", type=float, default=0.5)
    p.add_argument("--slot-length", type=int, default=100_000, help="tdm only")
    p.add_argument("--error-prob", type=float, default=0.10, help="tdm only")


def _add_gamma_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=int, default=None, help="absolute stretch")
    g.add_argument(
        "--gamma-frac",
        type=float,
        default=None,
        help="stretch as a fraction of epsilon, floored",
    )
    g.add_argument(
        "--gamma-eq-epsilon",
        action="store_true",
        help="stretch by exactly epsilon (the no-miss setting; default)",
    )
    p.add_argument(
        "--allow-excess-gamma",
        action="store_true",
        help="permit gamma above epsilon (admits undecidable states)",
    )


def _resolve_gamma(args: argparse.Namespace, epsilon: int) -> int:
    if args.gamma is not None:
        return args.gamma
    if args.gamma_frac is not None:
        return int(args.gamma_frac * epsilon)
    return epsilon


def _simulate(args: argparse.Namespace) -> Trace:
    common = dict(
        n=args.n,
        epsilon=args.epsilon,
        alpha=args.alpha,
        beta=args.beta,
        delta=args.delta,
        ell=args.ell,
        steps=args.steps,
        seed=args.seed,
        tick_advance_prob=args.tick_advance_prob,
    )
    if args.workload == "tdm":
        cfg = sim.TdmConfig(
            slot_length=args.slot_length, error_prob=args.error_prob, **common
        )
        return sim.simulate_tdm(cfg)
    return sim.simulate_conjunctive(sim.SimConfig(**common))


def _load_or_simulate(args: argparse.Namespace) -> Trace:
    if getattr(args, "infile", None):
        return read_trace(args.infile)
    return _simulate(args)


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ts(t) -> list[int]:
    return [t.l, t.c]


def _opt_ts(t) -> list[int] | None:
    return None if t is None else [t.l, t.c]


def cmd_simulate(args: argparse.Namespace) -> int:
    _emit(args, dumps_trace(_simulate(args)))
    return 0


def cmd_detect_gamma(args: argparse.Namespace) -> int:
    trace = _load_or_simulate(args)
    predicate = parse_predicate(args.predicate)
    gamma = _resolve_gamma(args, trace.epsilon)
    cfg = MonitorConfig(
        gamma, trace.c_max, trace.epsilon, allow_excess=args.allow_excess_gamma
    )
    segments = pipeline.monitor_segments(
        trace, predicate, gamma, allow_excess=args.allow_excess_gamma
    )
    lines = []
    for det in detect(segments, predicate, cfg):
        lines.append(
            json.dumps(
                {
                    "start": _ts(det.start),
                    "end": _opt_ts(det.end),
                    "contributing": [list(src) for src in det.contributing],
                    "predicate": det.predicate,
                }
            )
        )
    _emit(args, "".join(line + "\n" for line in lines))
    return 0


def _truth_for(trace: Trace, predicate) -> list[ground_truth.Snapshot]:
    if isinstance(predicate, Conjunctive):
        return ground_truth.detect_all_valid(trace, predicate)
    if isinstance(predicate, SumGreater) and predicate.limit == 1:
        return ground_truth.detect_mutex_violations(trace, predicate.var)
    raise UnsupportedPredicateError(
        "exact reference supports conj:VAR and sum_gt:VAR:1 only"
    )


def cmd_ground_truth(args: argparse.Namespace) -> int:
    trace = _load_or_simulate(args)
    predicate = parse_predicate(args.predicate)
    lines = []
    for snap in _truth_for(trace, predicate):
        lines.append(
            json.dumps(
                {
                    "times": [_ts(t) for t in snap.times],
                    "intervals": list(snap.interval_indices),
                    "point": _ts(snap.point),
                    "region": {
                        "start": _ts(snap.region_start),
                        "end": _opt_ts(snap.region_end),
                    },
                }
            )
        )
    _emit(args, "".join(line + "\n" for line in lines))
    return 0


def cmd_two_layer(args: argparse.Namespace) -> int:
    trace = _load_or_simulate(args)
    predicate = parse_predicate(args.predicate)
    gamma = _resolve_gamma(args, trace.epsilon)
    cfg = pipeline.PipelineConfig(
        predicate=predicate,
        gamma=gamma,
        window=args.window,
        batch=args.batch,
        mode=args.mode,
        timing=args.timing,
        allow_excess_gamma=args.allow_excess_gamma,
    )
    report = pipeline.run_two_layer(trace, cfg)
    payload = {
        "format": "hlcmon-report/1",
        "mode": report.mode,
        "gamma": report.gamma,
        "window": report.window,
        "epsilon": report.epsilon,
        "total_windows": report.total_windows,
        "marked_windows": report.marked_windows,
        "solver_calls": report.solver_calls,
        "layer1_ms": round(report.layer1_ms, 3),
        "layer2_ms": round(report.layer2_ms, 3),
        "confirmed": [
            {
                "window": m.window_index,
                "times": [_ts(t) for t in m.times],
                "values": [list(v) for v in m.values],
            }
            for m in report.confirmed
        ],
        "batches": [asdict(b) for b in report.batches],
    }
    if args.score:
        truth = pipeline.snapshot_regions(_truth_for(trace, predicate))
        reported = pipeline.witness_regions(report.confirmed, trace.c_max)
        sc = pipeline.score(reported, truth)
        payload["score"] = {
            "tp": sc.tp,
            "fp": sc.fp,
            "fn": sc.fn,
            "precision": sc.precision,
            "recall": sc.recall,
        }
    _emit(args, json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_emit_smt(args: argparse.Namespace) -> int:
    trace = _load_or_simulate(args)
    predicate = parse_predicate(args.predicate)
    ctx = WindowContext(trace, predicate, window=args.window)
    if args.window_index:
        targets = sorted(set(args.window_index))
    else:
        gamma = _resolve_gamma(args, trace.epsilon)
        cfg = MonitorConfig(
            gamma, trace.c_max, trace.epsilon, allow_excess=args.allow_excess_gamma
        )
        dets = detect(
            pipeline.monitor_segments(
                trace, predicate, gamma, allow_excess=args.allow_excess_gamma
            ),
            predicate,
            cfg,
        )
        targets = mark_windows(dets, ctx.window, ctx.epsilon, ctx.total_windows)
    bad = [k for k in targets if not 0 <= k < ctx.total_windows]
    if bad:
        raise ValueError(f"window index out of range: {bad[0]}")
    os.makedirs(args.outdir, exist_ok=True)
    written = []
    for k in targets:
        path = os.path.join(args.outdir, f"window_{k}.smt2")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(emit_smtlib(ctx.constraints(k)))
        written.append(path)
    sys.stdout.write("".join(p + "\n" for p in written))
    return 0


def _parse_grid(text: str, cast) -> list:
    return [cast(tok) for tok in text.split(",") if tok]


def cmd_sweep(args: argparse.Namespace) -> int:
    cells = list(
        itertools.product(
            _parse_grid(args.n, int),
            _parse_grid(args.epsilon, int),
            _parse_grid(args.alpha, float),
            _parse_grid(args.beta, float),
            _parse_grid(args.delta, int),
            _parse_grid(args.ell, int),
        )
    )
    fracs = _parse_grid(args.gamma_fracs, float)
    rows = [pipeline.metrics_header()]
    for idx, (n, epsilon, alpha, beta, delta, ell) in enumerate(cells):
        common = dict(
            n=n,
            epsilon=epsilon,
            alpha=alpha,
            beta=beta,
            delta=delta,
            ell=ell,
            steps=args.steps,
            seed=args.seed + idx,
        )
        if args.workload == "tdm":
            trace = sim.simulate_tdm(
                sim.TdmConfig(
                    slot_length=args.slot_length, error_prob=args.error_prob, **common
                )
            )
            predicate: Conjunctive | SumGreater = SumGreater(args.var, 1)
        else:
            trace = sim.simulate_conjunctive(sim.SimConfig(**common))
            predicate = Conjunctive(args.var)
        truth = pipeline.snapshot_regions(_truth_for(trace, predicate))
        for frac in fracs:
            gamma = int(frac * trace.epsilon)
            mon_cfg = MonitorConfig(gamma, trace.c_max, trace.epsilon)
            dets = detect(
                pipeline.monitor_segments(trace, predicate, gamma), predicate, mon_cfg
            )
            sc = pipeline.score(pipeline.detection_regions(dets), truth)
            run_cfg = pipeline.PipelineConfig(
                predicate=predicate,
                gamma=gamma,
                window=args.window,
                batch=args.batch,
            )
            report = pipeline.run_two_layer(trace, run_cfg)
            rows.append(pipeline.metrics_row(trace.config, gamma, sc, report))
    _emit(args, "".join(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="hlcmon",
        description="two-layer runtime monitoring of distributed predicates",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a trace")
    _add_sim_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("detect-gamma", help="run the stretched-interval monitor")
    p.add_argument("--in", dest="infile", default=None, help="trace file")
    _add_sim_args(p)
    _add_gamma_args(p)
    p.add_argument("--predicate", default="conj:v")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_detect_gamma)

    p = sub.add_parser("ground-truth", help="run the exact reference detector")
    p.add_argument("--in", dest="infile", default=None)
    _add_sim_args(p)
    p.add_argument("--predicate", default="conj:v")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_ground_truth)

    p = sub.add_parser("two-layer", help="run the window pipeline")
    p.add_argument("--in", dest="infile", default=None)
    _add_sim_args(p)
    _add_gamma_args(p)
    p.add_argument("--predicate", default="conj:v")
    p.add_argument("--window", type=int, default=None, help="defaults to epsilon")
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--mode", choices=("two_layer", "single_layer"), default="two_layer")
    p.add_argument("--timing", action="store_true", help="report wall-clock times")
    p.add_argument("--score", action="store_true", help="score against the reference")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_two_layer)

    p = sub.add_parser("emit-smt", help="write window constraints as SMT-LIB")
    p.add_argument("--in", dest="infile", default=None)
    _add_sim_args(p)
    _add_gamma_args(p)
    p.add_argument("--predicate", default="conj:v")
    p.add_argument("--window", type=int, default=None)
    p.add_argument(
        "--window-index",
        type=int,
        action="append",
        default=None,
        help="window to emit; repeatable; default emits all marked windows",
    )
    p.add_argument("--outdir", default="smt")
    p.set_defaults(fn=cmd_emit_smt)

    p = sub.add_parser("sweep", help="grid study into a metrics CSV")
    p.add_argument("--workload", choices=("conjunctive", "tdm"), default="conjunctive")
    p.add_argument("--n", default="10", help="comma list")
    p.add_argument("--epsilon", default="100", help="comma list")
    p.add_argument("--alpha", default="0.1", help="comma list")
    p.add_argument("--beta", default="0.02", help="comma list")
    p.add_argument("--delta", default="10", help="comma list")
    p.add_argument("--ell", default="1", help="comma list")
    p.add_argument("--gamma-fracs", default="0.10,0.15,0.20,0.25,0.50,0.75,1.0")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--var", default="v")
    p.add_argument("--slot-length", type=int, default=100_000, help="tdm only")
    p.add_argument("--error-prob", type=float, default=0.10, help="tdm only")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_sweep)

    return top


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (TraceFormatError, UnsupportedPredicateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
