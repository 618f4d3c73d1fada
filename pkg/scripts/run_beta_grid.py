"""Sweep the conjunctive workload over raise rates and stretch values.

Produces the raw metrics CSV plus one gnuplot-ready .dat file per raise
rate with columns ``gamma precision recall`` (layer-1 scores). Missing
ratios are written as NA; plot with ``set datafile missing "NA"``.

The defaults reproduce the desk-scale grid used by the acceptance
tests and take a few minutes; pass --quick for a small smoke run.
"""

import argparse
import csv
import sys
from pathlib import Path

from hlcmon.cli import main as hlcmon

GAMMA_FRACS = "0.10,0.15,0.20,0.25,0.50,0.75,1.0"


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("results/beta_grid"))
    ap.add_argument("--beta", default="0.020,0.025,0.030,0.035,0.040,0.045")
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--epsilon", type=int, default=100)
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--quick", action="store_true", help="tiny run for smoke tests")
    return ap.parse_args(argv)


def split_by_beta(csv_path: Path, outdir: Path) -> list[Path]:
    with csv_path.open() as fh:
        fh.readline()  # format tag
        rows = list(csv.DictReader(fh))
    written = []
    for beta in sorted({row["beta"] for row in rows}, key=float):
        dat = outdir / f"beta_{beta}.dat"
        with dat.open("w") as fh:
            fh.write("# gamma precision recall\n")
            for row in rows:
                if row["beta"] == beta:
                    fh.write(f"{row['gamma']} {row['precision']} {row['recall']}\n")
        written.append(dat)
    return written


def main(argv=None) -> int:
    args = parse_args(argv)
    if args.quick:
        args.n, args.epsilon, args.steps = 3, 20, 3_000
        args.beta = "0.05,0.10"
    args.outdir.mkdir(parents=True, exist_ok=True)
    csv_path = args.outdir / "metrics.csv"
    rc = hlcmon(
        [
            "sweep",
            "--workload", "conjunctive",
            "--n", str(args.n),
            "--epsilon", str(args.epsilon),
            "--beta", args.beta,
            "--gamma-fracs", GAMMA_FRACS,
            "--steps", str(args.steps),
            "--seed", str(args.seed),
            "--out", str(csv_path),
        ]
    )
    if rc != 0:
        return rc
    for dat in split_by_beta(csv_path, args.outdir):
        print(dat)
    print(csv_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
