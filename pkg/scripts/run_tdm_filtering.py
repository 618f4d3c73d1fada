"""Measure how much window marking saves the per-window solver.

Runs the time-division mutual-exclusion workload once, then drives the
pipeline over a range of stretch values in both modes on the same
trace. Prints solver-call counts and the two-layer/single-layer ratio;
optionally writes a timing .dat with per-layer wall-clock columns.
"""

import argparse
import sys

from hlcmon.monitor import SumGreater
from hlcmon.pipeline import PipelineConfig, run_two_layer
from hlcmon.sim import TdmConfig, simulate_tdm

GAMMA_FRACS = (0.10, 0.25, 0.50, 0.75, 1.0)


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--epsilon", type=int, default=100)
    ap.add_argument("--slot-length", type=int, default=5_000)
    ap.add_argument("--error-prob", type=float, default=0.10)
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--var", default="v")
    ap.add_argument("--timing-out", help="write 'gamma layer1_ms layer2_ms' here")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    cfg = TdmConfig(
        n=args.n,
        epsilon=args.epsilon,
        steps=args.steps,
        seed=args.seed,
        slot_length=args.slot_length,
        error_prob=args.error_prob,
    )
    trace = simulate_tdm(cfg)
    predicate = SumGreater(args.var, 1)
    print(f"trace: {len(trace.events)} events, {len(trace.messages())} messages")
    print(f"{'gamma':>6} {'two_layer':>10} {'single':>8} {'ratio':>7} {'confirmed':>10}")
    timing_rows = []
    for frac in GAMMA_FRACS:
        gamma = int(frac * cfg.epsilon)
        two = run_two_layer(trace, PipelineConfig(predicate, gamma, timing=True))
        one = run_two_layer(
            trace, PipelineConfig(predicate, gamma, mode="single_layer", timing=True)
        )
        ratio = two.solver_calls / one.solver_calls
        print(
            f"{gamma:>6} {two.solver_calls:>10} {one.solver_calls:>8}"
            f" {ratio:>7.3f} {len(two.confirmed):>10}"
        )
        timing_rows.append(f"{gamma} {two.layer1_ms:.3f} {two.layer2_ms:.3f}\n")
    if args.timing_out:
        with open(args.timing_out, "w") as fh:
            fh.write("# gamma layer1_ms layer2_ms\n")
            fh.writelines(timing_rows)
        print(f"timing written to {args.timing_out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
