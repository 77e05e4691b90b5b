"""Experiment orchestration: many seeds, many methods, one summary.

Layout of an output directory::

    <protocol>_<shift>_<method>_seed<seed>.csv   per-round trace
    summary.json                                  mean / std over seeds

Trace columns are ``t, q_true_1..K, q_hat_1..K, n_correct, n_total`` plus
``switched``, ``restart`` and ``refit`` when the method reports them.
"""
import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .data import SoftmaxStream, load_softmax_stream, make_synthetic_benchmark
from .errors import InvalidParameterError, LabelShiftError
from .metrics import RoundRecord, score_run
from .model import TrainerConfig
from .regression import flh_learning_rate
from .shifts import KINDS, corner_anchors, make_schedule
from .sols import LEARNERS, SolsConfig, run_sols
from .uols import METHODS, UolsConfig, run_uols

log = logging.getLogger(__name__)

PROTOCOLS = ("uols", "sols")
FLAG_COLUMNS = ("switched", "restart", "refit")


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = "uols"
    methods: tuple = ("base", "fth", "ftfwh", "flh-ftl", "oracle")
    shift: str = "ber"
    horizon: int | None = None  # None -> 1000 for uols, 200 for sols
    seeds: tuple = (0, 1, 2)
    out_dir: str = "results"
    # data
    holdout: str | None = None  # softmax-stream CSVs; synthetic data when unset
    target: str | None = None
    data_seed: int = 23
    holdout_frac: float = 0.1
    anchor_eps: float = 0.05
    anchors: tuple | None = None
    period: int | None = None
    flip_prob: float | None = None
    alpha0: float = 0.0
    # uols
    per_step: int = 10
    projection: str = "simplex"
    predict: str = "argmax"
    flh_lr: float | str | None = None
    window: int = 100
    lpa_delta: float = 0.05
    lpa_sigma_sq: float | None = None
    # sols
    n_per_round: int = 50
    mu: float | None = None
    trainer: TrainerConfig = field(default_factory=lambda: TrainerConfig(epochs=30))
    jobs: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise InvalidParameterError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if isinstance(self.methods, str):
            object.__setattr__(self, "methods", (self.methods,))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise InvalidParameterError("at least one seed is required")
        if not self.methods:
            raise InvalidParameterError("at least one method is required")
        allowed = METHODS if self.protocol == "uols" else LEARNERS + ("lazy-werm",)
        unknown = [m for m in self.methods if m not in allowed]
        if unknown:
            raise InvalidParameterError(f"unknown {self.protocol} method(s) {unknown}; expected {allowed}")
        if self.shift not in KINDS:
            raise InvalidParameterError(f"unknown shift {self.shift!r}; expected one of {KINDS}")
        if (self.holdout is None) != (self.target is None):
            raise InvalidParameterError("holdout and target streams must be given together")
        if self.protocol == "sols" and self.holdout is not None:
            raise InvalidParameterError("sols runs need covariates; softmax streams are uols only")
        if self.jobs < 1:
            raise InvalidParameterError("jobs must be >= 1")
        if isinstance(self.trainer, dict):
            object.__setattr__(self, "trainer", TrainerConfig(**self.trainer))

    @property
    def T(self) -> int:
        if self.horizon is not None:
            return self.horizon
        return 1000 if self.protocol == "uols" else 200

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise InvalidParameterError(f"unknown config key(s): {', '.join(unknown)}")
        d = dict(d)
        if d.get("anchors") is not None:
            d["anchors"] = tuple(tuple(float(v) for v in a) for a in d["anchors"])
        return cls(**d)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["seeds"] = list(self.seeds)
        return d

    def anchor_pair(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if self.anchors is not None:
            mu1, mu2 = (np.asarray(a, dtype=float) for a in self.anchors)
            return mu1, mu2
        return corner_anchors(k, self.anchor_eps)


def trace_name(protocol: str, shift: str, method: str, seed: int) -> str:
    return f"{protocol}_{shift}_{method}_seed{seed}.csv"


def write_trace(path, records: list[RoundRecord]) -> None:
    k = len(records[0].q_true)
    extra = [c for c in FLAG_COLUMNS if any(getattr(r, c) is not None for r in records)]
    header = (["t"] + [f"q_true_{i + 1}" for i in range(k)] + [f"q_hat_{i + 1}" for i in range(k)]
              + ["n_correct", "n_total"] + extra)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in records:
            row = [r.t] + [repr(float(v)) for v in r.q_true] + [repr(float(v)) for v in r.q_hat]
            row += [r.n_correct, r.n_total] + [int(bool(getattr(r, c))) for c in extra]
            w.writerow(row)


def read_trace(path) -> dict:
    """Parse a trace back into arrays keyed by column group."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    col = {name: i for i, name in enumerate(header)}
    k = sum(1 for h in header if h.startswith("q_true_"))
    out = {
        "t": body[:, col["t"]].astype(int),
        "q_true": body[:, [col[f"q_true_{i + 1}"] for i in range(k)]],
        "q_hat": body[:, [col[f"q_hat_{i + 1}"] for i in range(k)]],
        "n_correct": body[:, col["n_correct"]].astype(int),
        "n_total": body[:, col["n_total"]].astype(int),
    }
    for c in FLAG_COLUMNS:
        if c in col:
            out[c] = body[:, col[c]].astype(bool)
    return out


def trace_metrics(trace: dict) -> dict:
    err = 1 - trace["n_correct"].sum() / trace["n_total"].sum()
    mse = float(np.mean(np.sum((trace["q_hat"] - trace["q_true"]) ** 2, axis=1)))
    v_t = float(np.abs(np.diff(trace["q_true"], axis=0)).sum())
    return {"error": float(err), "mse": mse, "v_t": v_t}


def _load_streams(cfg: ExperimentConfig) -> tuple[SoftmaxStream, SoftmaxStream]:
    return load_softmax_stream(cfg.holdout), load_softmax_stream(cfg.target)


def run_seed(cfg: ExperimentConfig, seed: int) -> list[dict]:
    """Every method of ``cfg`` on one seed. Failed runs come back with an error status."""
    out_dir = Path(cfg.out_dir)
    results = []
    try:
        if cfg.holdout is not None:
            holdout, target = _load_streams(cfg)
            k = holdout.k
            bench = None
        else:
            bench = make_synthetic_benchmark(seed, data_seed=cfg.data_seed, holdout_frac=cfg.holdout_frac)
            holdout, target, k = bench.holdout_stream(), bench.target_stream(), bench.source.k
        schedule = make_schedule(cfg.shift, cfg.T, seed=seed, anchors=cfg.anchor_pair(k), k=k,
                                 period=cfg.period, flip_prob=cfg.flip_prob, alpha0=cfg.alpha0)
    except (LabelShiftError, ValueError, OSError) as exc:
        log.error("seed %d: setup failed: %s", seed, exc)
        return [{"method": m, "seed": seed, "status": f"error: {exc}"} for m in cfg.methods]

    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            if cfg.protocol == "uols":
                ucfg = UolsConfig(method, cfg.projection, cfg.predict, cfg.per_step, cfg.T, seed, cfg.flh_lr,
                                  cfg.window, cfg.lpa_delta, cfg.lpa_sigma_sq)
                run = run_uols(ucfg, holdout, target, schedule, q0=bench.q0 if bench is not None else None)
                records = run.records
                extra = {"switches": run.switches, "restarts": run.restarts}
            else:
                lr = flh_learning_rate(k) if cfg.flh_lr == "theory" else cfg.flh_lr
                scfg = SolsConfig(method, cfg.n_per_round, cfg.T, cfg.mu, flh_lr=lr, window=cfg.window, lpa_delta=cfg.lpa_delta, lpa_sigma_sq=cfg.lpa_sigma_sq,
                                  trainer=cfg.trainer, seed=seed)
                run = run_sols(scfg, bench.target_x, schedule)
                records = run.records
                extra = {"refits": run.refits}
            metrics = score_run(records).as_dict()
            metrics.update({key: v for key, v in extra.items() if v is not None})
            write_trace(out_dir / trace_name(cfg.protocol, cfg.shift, method, seed), records)
            status = "ok"
        except (LabelShiftError, ValueError, FloatingPointError) as exc:
            log.error("%s seed %d failed: %s", method, seed, exc)
            metrics, status = {}, f"error: {exc}"
        ms = (time.perf_counter() - t0) * 1000
        results.append({"method": method, "seed": seed, "status": status, "runtime_ms": ms, **metrics})
    return results


def _std(values: list[float]) -> float:
    # sample standard deviation; a single seed has no spread
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def summarize_runs(runs: list[dict], methods) -> dict:
    out = {}
    for method in methods:
        rows = [r for r in runs if r["method"] == method]
        ok = [r for r in rows if r["status"] == "ok"]
        failed = [r for r in rows if r["status"] != "ok"]
        entry = {"status": "ok" if not failed else ("failed" if not ok else "partial"),
                 "n_seeds": len(ok)}
        if ok:
            err = [r["error"] for r in ok]
            mse = [r["mse"] for r in ok]
            entry.update({
                "error_mean": float(np.mean(err)), "error_std": _std(err),
                "mse_mean": float(np.mean(mse)), "mse_std": _std(mse),
                "v_t": float(np.mean([r["v_t"] for r in ok])),
                "runtime_ms": float(np.mean([r["runtime_ms"] for r in ok])),
            })
            for key in ("switches", "restarts", "refits"):
                if all(key in r for r in ok):
                    entry[key + "_mean"] = float(np.mean([r[key] for r in ok]))
        if failed:
            entry["errors"] = {str(r["seed"]): r["status"] for r in failed}
        entry["per_seed"] = {str(r["seed"]): {k: r[k] for k in ("error", "mse") if k in r} for r in ok}
        out[method] = entry
    return out


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run all seeds and methods, write traces and ``summary.json``; return the summary."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(cfg.seeds))) as pool:
            per_seed = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        per_seed = [run_seed(cfg, s) for s in cfg.seeds]
    runs = [r for rs in per_seed for r in rs]
    k = 3
    if cfg.holdout is not None:
        try:
            k = load_softmax_stream(cfg.holdout).k
        except (LabelShiftError, ValueError, OSError):
            pass
    mu1, mu2 = cfg.anchor_pair(k)
    summary = {
        "protocol": cfg.protocol,
        "shift": cfg.shift,
        "horizon": cfg.T,
        "seeds": list(cfg.seeds),
        "anchors": {"mu1": mu1.tolist(), "mu2": mu2.tolist()},
        "config": cfg.as_dict(),
        "methods": summarize_runs(runs, cfg.methods),
    }
    with (out_dir / "summary.json").open("w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def summarize_dir(path) -> dict:
    """Recompute per-method mean and std from the traces in ``path``."""
    groups: dict[tuple, list[dict]] = {}
    for trace in sorted(Path(path).glob("*_seed*.csv")):
        stem = trace.stem
        head, seed = stem.rsplit("_seed", 1)
        protocol, shift, method = head.split("_", 2)
        m = trace_metrics(read_trace(trace))
        groups.setdefault((protocol, shift, method), []).append({"seed": int(seed), **m})
    table = {}
    for (protocol, shift, method), rows in groups.items():
        err = [r["error"] for r in rows]
        mse = [r["mse"] for r in rows]
        table[f"{protocol}/{shift}/{method}"] = {
            "n_seeds": len(rows),
            "error_mean": float(np.mean(err)), "error_std": _std(err),
            "mse_mean": float(np.mean(mse)), "mse_std": _std(mse),
        }
    return table


def format_table(table: dict) -> str:
    lines = [f"{'run':<28} {'seeds':>5} {'error %':>16} {'mse':>18}"]
    for key in sorted(table):
        r = table[key]
        lines.append(f"{key:<28} {r['n_seeds']:>5} {100 * r['error_mean']:>8.2f} ± {100 * r['error_std']:<5.2f}"
                     f" {r['mse_mean']:>9.4f} ± {r['mse_std']:<6.4f}")
    return "\n".join(lines)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
