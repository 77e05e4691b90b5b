#!/usr/bin/env python3
"""Supervised synthetic benchmark: wERM, lazy wERM, CT and CT-RS under a Bernoulli shift.

    python scripts/sols_synthetic.py --out results/sols --jobs 3
"""
import argparse

from labelshift.harness import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results/sols")
    ap.add_argument("--shift", default="ber")
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    ap.add_argument("--lpa-sigma-sq", type=float, default=None, help="override the 1/N default")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig(protocol="sols", shift=args.shift, methods=("werm", "lazy", "ct-rs", "ct"),
                           seeds=tuple(args.seeds), out_dir=args.out, lpa_sigma_sq=args.lpa_sigma_sq, jobs=args.jobs)
    summary = run_experiment(cfg)["methods"]
    for m, e in summary.items():
        extra = f"  refits {e['refits_mean']:.0f}" if "refits_mean" in e else ""
        print(f"{m:6} error {100 * e['error_mean']:5.2f} ± {100 * e['error_std']:4.2f}  "
              f"time {e['runtime_ms'] / 1000:5.1f}s{extra}")


if __name__ == "__main__":
    main()
