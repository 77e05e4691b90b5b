#!/usr/bin/env python3
"""Switching behaviour of the low-switching wrapper.

Part 1 runs it on a noisy four-segment stream and prints where the output
changed. Part 2 measures how long the drift test takes to fire after a
jump in a supervised Squ run, which is what separates lazy from eager
wERM. Part 3 sweeps the noise bound used in the threshold.
"""
import argparse
import math

import numpy as np

from labelshift.data import make_synthetic_benchmark
from labelshift.lpa import LowSwitchRegressor, LpaConfig
from labelshift.metrics import score_run
from labelshift.model import TrainerConfig
from labelshift.regression import FLHFTL, flh_learning_rate
from labelshift.shifts import corner_anchors, make_schedule
from labelshift.sols import SolsConfig, run_sols


def four_segments(T, seed):
    mu1, mu2 = corner_anchors(3, 0.05)
    theta = np.repeat(np.array([mu1, mu2, mu1, mu2]), T // 4, axis=0)
    a = math.sqrt(0.3)
    return theta + np.random.default_rng(seed).uniform(-a, a, theta.shape)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--T", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sweep", action="store_true", help="also run the sigma^2 sweep (slow)")
    args = ap.parse_args()

    cfg = LpaConfig(0.05, 0.1, args.T, 3)
    o = LowSwitchRegressor(FLHFTL(3, flh_learning_rate(3)), cfg)
    for z in four_segments(args.T, args.seed):
        o.update(z)
    print(f"threshold {cfg.threshold:.2f}; restarts at {o.restarts}")
    print(f"{o.count_switches()} switches (bound {4 * (math.log2(args.T) + 2):.1f}):",
          [(e.round, 'R' if e.reason == 'restart' else 'f') for e in o.switch_log])

    bench = make_synthetic_benchmark(args.seed)
    sched = make_schedule("squ", 200, period=50)
    run = run_sols(SolsConfig("lazy", seed=args.seed, trainer=TrainerConfig(epochs=3)), bench.target_x, sched)
    flips = [t for t in range(2, 201) if sched.alpha[t - 1] != sched.alpha[t - 2]]
    restarts = [r.t for r in run.records if r.restart]
    print(f"\nSqu, N=50: jumps at {flips}, restarts at {restarts}")

    if args.sweep:
        print("\nsigma^2 sweep, Ber, T=200, N=50, seed", args.seed)
        sched = make_schedule("ber", 200, seed=args.seed)
        eager = score_run(run_sols(SolsConfig("werm", seed=args.seed), bench.target_x, sched).records).error
        print(f"  eager wERM error {100 * eager:.2f}")
        for mult in (1, 4, 8, 20):
            r = run_sols(SolsConfig("lazy", seed=args.seed, lpa_sigma_sq=1 / (50 * mult)), bench.target_x, sched)
            print(f"  sigma^2 = 1/({mult}N): error {100 * score_run(r.records).error:.2f}, refits {r.refits}")


if __name__ == "__main__":
    main()
