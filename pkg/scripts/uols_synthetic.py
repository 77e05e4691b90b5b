#!/usr/bin/env python3
"""Unsupervised synthetic benchmark: every oracle on every shift, 3 seeds.

    python scripts/uols_synthetic.py --out results/uols
"""
import argparse
from pathlib import Path

from labelshift.harness import ExperimentConfig, run_experiment

METHODS = ("base", "fth", "ftfwh", "flh-ftl", "lpa", "oracle")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results/uols")
    ap.add_argument("--shifts", nargs="+", default=["ber", "sin", "squ", "mon"])
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    rows = {}
    for shift in args.shifts:
        cfg = ExperimentConfig(protocol="uols", shift=shift, methods=METHODS, seeds=tuple(args.seeds),
                               out_dir=str(Path(args.out) / shift), jobs=args.jobs)
        rows[shift] = run_experiment(cfg)["methods"]

    print(f"{'':10}" + "".join(f"{s:>16}" for s in args.shifts))
    for metric, scale, fmt in (("error", 100, "{:6.2f} ± {:4.2f}"), ("mse", 1, "{:6.3f} ± {:5.3f}")):
        print(f"-- {metric}")
        for m in METHODS:
            cells = [fmt.format(scale * rows[s][m][f"{metric}_mean"], scale * rows[s][m][f"{metric}_std"])
                     for s in args.shifts]
            print(f"{m:10}" + "".join(f"{c:>16}" for c in cells))


if __name__ == "__main__":
    main()
