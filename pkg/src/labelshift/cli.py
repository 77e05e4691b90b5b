"""Command line entry point: ``labelshift uols|sols|regress|gen-data|summarize``.

Every experiment flag can also be given in a JSON file passed with
``--config``; keys are the flag names with underscores. Flags on the
command line win over the file.
"""
import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import make_synthetic_benchmark, write_features, write_softmax_stream
from .errors import LabelShiftError
from .harness import ExperimentConfig, format_table, run_experiment, summarize_dir
from .lpa import LowSwitchRegressor, LpaConfig
from .regression import FLHFTL, RunningAverage, WindowAverage
from .shifts import KINDS
from .sols import LEARNERS
from .uols import METHODS

TRAINER_FLAGS = ("lr", "momentum", "batch_size", "l2", "epochs")


class CliError(Exception):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    if not isinstance(cfg, dict):
        raise CliError(f"{path}: top level must be an object")
    return cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--shift", choices=KINDS)
    p.add_argument("--T", dest="horizon", type=int, help="number of rounds")
    p.add_argument("--seed", dest="seeds", type=int, nargs="+", help="one or more seeds")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--data-seed", type=int)
    p.add_argument("--anchor-eps", type=float)
    p.add_argument("--period", type=int, help="Sin/Squ period L")
    p.add_argument("--flip-prob", type=float, help="Ber flip probability p")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--flh-lr", help="float, or 'theory'")
    p.add_argument("--window", type=int)
    p.add_argument("--lpa-delta", type=float)
    p.add_argument("--lpa-sigma-sq", type=float)
    p.add_argument("--jobs", type=int, help="parallel seeds")


def _experiment_config(args, protocol: str) -> ExperimentConfig:
    base = _load_config(args.config)
    base.setdefault("protocol", protocol)
    if base["protocol"] != protocol:
        raise CliError(f"config protocol {base['protocol']!r} does not match subcommand {protocol!r}")
    skip = {"config", "cmd", "func", "methods", "verbose"} | set(TRAINER_FLAGS)
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        base[key] = value
    if getattr(args, "methods", None):
        base["methods"] = args.methods
    if "flh_lr" in base and isinstance(base["flh_lr"], str) and base["flh_lr"] != "theory":
        try:
            base["flh_lr"] = float(base["flh_lr"])
        except ValueError:
            raise CliError(f"--flh-lr must be a number or 'theory', got {base['flh_lr']!r}") from None
    trainer = dict(base.get("trainer") or {})
    for key in TRAINER_FLAGS:
        if getattr(args, key, None) is not None:
            trainer[key] = getattr(args, key)
    if trainer or protocol == "sols":
        trainer.setdefault("epochs", 30)
        base["trainer"] = trainer
    return ExperimentConfig.from_dict(base)


def _run(cfg: ExperimentConfig) -> int:
    summary = run_experiment(cfg)
    rows = {}
    for method, entry in summary["methods"].items():
        if "error_mean" in entry:
            rows[f"{cfg.protocol}/{cfg.shift}/{method}"] = entry
        else:
            print(f"{method}: {entry['status']}", file=sys.stderr)
    if rows:
        print(format_table(rows))
    print(f"wrote {Path(cfg.out_dir) / 'summary.json'}")
    return 0 if all(e["status"] == "ok" for e in summary["methods"].values()) else 1


def cmd_uols(args) -> int:
    return _run(_experiment_config(args, "uols"))


def cmd_sols(args) -> int:
    return _run(_experiment_config(args, "sols"))


def _read_observations(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise CliError(f"{path} is empty")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    try:
        z = np.array(rows, dtype=float)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from None
    if z.ndim != 2 or len(z) == 0:
        raise CliError(f"{path}: expected rows of equal length")
    return z


def cmd_regress(args) -> int:
    base = _load_config(args.config)
    opts = {"oracle": "flh-ftl", "lr": None, "window": 100, "low_switch": False, "delta": 0.05, "sigma_sq": 0.1}
    opts.update({k: v for k, v in base.items() if k in opts})
    opts.update({k: v for k, v in vars(args).items() if k in opts and v not in (None, False)})
    z = _read_observations(args.input)
    T, k = z.shape
    lr = 1.0 / k if opts["lr"] is None else float(opts["lr"])
    if opts["oracle"] == "flh-ftl":
        oracle = FLHFTL(k, lr)
    elif opts["oracle"] == "fth":
        oracle = RunningAverage(k)
    else:
        oracle = WindowAverage(k, int(opts["window"]))
    if opts["low_switch"]:
        oracle = LowSwitchRegressor(oracle, LpaConfig(opts["delta"], opts["sigma_sq"], T, k))
    header = ["t"] + [f"theta_{i + 1}" for i in range(k)]
    if opts["low_switch"]:
        header += ["switched", "restart"]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for t in range(T):
            row = [t + 1] + [repr(float(v)) for v in oracle.predict()]
            oracle.update(z[t])
            if opts["low_switch"]:
                row += [int(oracle.last_switched), int(oracle.last_restart)]
            w.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_gen_data(args) -> int:
    base = _load_config(args.config)
    seed = args.seed if args.seed is not None else base.get("seed", 0)
    data_seed = args.data_seed if args.data_seed is not None else base.get("data_seed", 23)
    frac = args.holdout_frac if args.holdout_frac is not None else base.get("holdout_frac", 0.1)
    out = Path(args.out or base.get("out", "data"))
    out.mkdir(parents=True, exist_ok=True)
    bench = make_synthetic_benchmark(seed, data_seed=data_seed, holdout_frac=frac)
    write_features(out / "train.csv", bench.train_x, bench.train_y)
    write_features(out / "holdout.csv", bench.holdout_x, bench.holdout_y)
    tx = np.concatenate(bench.target_x)
    ty = np.concatenate([np.full(len(a), j) for j, a in enumerate(bench.target_x)])
    write_features(out / "target.csv", tx, ty)
    write_softmax_stream(out / "holdout_softmax.csv", bench.holdout_stream())
    write_softmax_stream(out / "target_softmax.csv", bench.target_stream())
    print(f"wrote synthetic data (seed {seed}, centres seed {data_seed}) to {out}")
    return 0


def cmd_summarize(args) -> int:
    table = {}
    for d in args.dirs:
        if not Path(d).is_dir():
            raise CliError(f"{d} is not a directory")
        table.update(summarize_dir(d))
    if not table:
        raise CliError("no traces found")
    print(json.dumps(table, indent=2, sort_keys=True) if args.json else format_table(table))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="labelshift", description="Online label shift experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("uols", help="unsupervised runs: regress the marginal, reweight a fixed classifier")
    _add_common(p)
    p.add_argument("--method", "--oracle", dest="methods", action="append", choices=METHODS,
                   help="repeat for several; default runs base, fth, ftfwh, flh-ftl and oracle")
    p.add_argument("--per-step", type=int)
    p.add_argument("--holdout-frac", type=float)
    p.add_argument("--projection", choices=("simplex", "none"))
    p.add_argument("--predict", choices=("argmax", "sample"))
    p.add_argument("--holdout", help="softmax-stream CSV used for the confusion matrix")
    p.add_argument("--target", help="softmax-stream CSV sampled during the run")
    p.set_defaults(func=cmd_uols)

    p = sub.add_parser("sols", help="supervised runs: labels revealed after each round")
    _add_common(p)
    p.add_argument("--learner", dest="methods", action="append", choices=LEARNERS + ("lazy-werm",))
    p.add_argument("--N", dest="n_per_round", type=int)
    p.add_argument("--mu", type=float, help="clip floor for the marginal estimate")
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_sols)

    p = sub.add_parser("regress", help="run an online regression oracle over a CSV of observations")
    p.add_argument("input")
    p.add_argument("--config")
    p.add_argument("--oracle", choices=("flh-ftl", "fth", "ftfwh"))
    p.add_argument("--lr", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--low-switch", action="store_true")
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma-sq", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("gen-data", help="dump the synthetic Gaussian data and base-model softmax streams")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--data-seed", type=int)
    p.add_argument("--holdout-frac", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("summarize", help="mean ± std over the traces in one or more directories")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, LabelShiftError, ValueError, TypeError, OSError) as exc:
        print(f"labelshift: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
