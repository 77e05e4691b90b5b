"""Unsupervised online label shift: track the marginal, reweight a frozen classifier.

Each round the learner sees only classifier outputs ``f0(x)`` for the new
covariates. It asks its online regression oracle for the current label
marginal, reweights every softmax by ``q_hat / q0``, predicts, and only then
feeds the oracle the black-box estimate ``C^{-1} mean(f0(x))``.

Two reference pipelines share the loop: ``base`` (``q_hat = q0``, i.e. no
adaptation) and ``oracle`` (``q_hat`` = the true marginal).
"""
import logging
from dataclasses import dataclass

import numpy as np

from .data import SoftmaxStream
from .errors import DegenerateReweightError, InvalidInputError, InvalidParameterError
from .lpa import LowSwitchRegressor, LpaConfig
from .marginal import ConfusionMatrix, batch_estimate, build_confusion
from .metrics import RoundRecord
from .regression import FLHFTL, OnlineRegressor, RunningAverage, WindowAverage, flh_learning_rate
from .shifts import ShiftSchedule
from .simplex import floor_renormalize, project_simplex

log = logging.getLogger(__name__)

ORACLES = ("flh-ftl", "fth", "ftfwh", "lpa")
REFERENCE = ("base", "oracle")
METHODS = REFERENCE + ORACLES

UolsRoundRecord = RoundRecord


@dataclass(frozen=True)
class UolsConfig:
    method: str = "flh-ftl"
    projection: str = "simplex"  # or "none"
    predict: str = "argmax"  # or "sample"
    per_step: int = 10
    horizon: int = 1000
    seed: int = 0
    flh_lr: float | str | None = None  # None -> 1/K, "theory" -> sigma_min^2/(8K)
    window: int = 100
    lpa_delta: float = 0.05
    lpa_sigma_sq: float | None = None  # None -> 1/sigma_min^2
    per_sample_updates: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.projection not in ("simplex", "none"):
            raise InvalidParameterError(f"projection must be simplex or none, got {self.projection!r}")
        if self.predict not in ("argmax", "sample"):
            raise InvalidParameterError(f"predict must be argmax or sample, got {self.predict!r}")
        if self.horizon < 1 or self.per_step < 1:
            raise InvalidParameterError("horizon and per_step must be >= 1")


def reweight(softmax, q0, q_hat) -> np.ndarray:
    """``softmax[i] * q_hat[i] / q0[i]``, normalised."""
    p = np.asarray(softmax, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    if np.any(q0 <= 0):
        raise InvalidInputError("q0 must be strictly positive")
    r = p * (np.asarray(q_hat, dtype=float) / q0)
    z = r.sum()
    if not z > 0:
        raise DegenerateReweightError("every reweighted probability is zero")
    return r / z


def reweight_batch(softmaxes: np.ndarray, q0: np.ndarray, q_hat: np.ndarray) -> np.ndarray:
    """Row-wise :func:`reweight`; degenerate rows fall back to the raw softmax."""
    r = softmaxes * (q_hat / q0)
    z = r.sum(axis=1, keepdims=True)
    bad = (z <= 0)[:, 0]
    if bad.any():
        log.warning("degenerate reweighting for %d sample(s); using raw softmax", int(bad.sum()))
        r[bad] = softmaxes[bad]
        z[bad] = softmaxes[bad].sum(axis=1, keepdims=True)
    return r / z


def make_oracle(name: str, k: int, lr: float, window: int = 100, lpa: LpaConfig | None = None) -> OnlineRegressor:
    if name == "flh-ftl":
        return FLHFTL(k, lr)
    if name == "fth":
        return RunningAverage(k)
    if name == "ftfwh":
        return WindowAverage(k, window)
    if name == "lpa":
        if lpa is None:
            raise InvalidParameterError("lpa oracle needs an LpaConfig")
        return LowSwitchRegressor(FLHFTL(k, lr), lpa)
    raise InvalidParameterError(f"unknown oracle {name!r}")


class RegressAndReweight:
    """The per-round UOLS learner. Never sees labels."""

    def __init__(self, config: UolsConfig, conf: ConfusionMatrix, q0, rng: np.random.Generator | None = None):
        q0 = np.asarray(q0, dtype=float)
        if np.any(q0 <= 0):
            raise InvalidParameterError("q0 has zero entries; reweighting is undefined")
        self.config = config
        self.conf = conf
        self.q0 = q0
        self.k = len(q0)
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.oracle = None
        if config.method in ORACLES:
            self.oracle = make_oracle(config.method, self.k, self.learning_rate(), config.window,
                                      self.lpa_config())

    def learning_rate(self) -> float:
        lr = self.config.flh_lr
        if lr is None:
            return 1.0 / self.k
        if lr == "theory":
            return flh_learning_rate(self.k, self.conf.sigma_min)
        return float(lr)

    def lpa_config(self) -> LpaConfig:
        sigma_sq = self.config.lpa_sigma_sq
        if sigma_sq is None:
            sigma_sq = 1.0 / self.conf.sigma_min**2
        n_updates = self.config.horizon * (self.config.per_step if self.config.per_sample_updates else 1)
        return LpaConfig(self.config.lpa_delta, sigma_sq, n_updates, self.k)

    def current_estimate(self, q_true=None) -> np.ndarray:
        method = self.config.method
        if method == "base":
            return self.q0.copy()
        if method == "oracle":
            if q_true is None:
                raise InvalidInputError("the oracle pipeline needs the true marginal")
            return np.asarray(q_true, dtype=float)
        raw = self.oracle.predict()
        if self.config.projection == "simplex":
            return project_simplex(raw)
        q = floor_renormalize(raw)
        # nothing positive to reweight with: behave like the base classifier
        return self.q0.copy() if q is None else q

    def step(self, softmaxes, q_true=None) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
        """Predict for one round, then update the oracle.

        Returns ``(q_hat, predictions, s_t, flags)``.
        """
        p = np.asarray(softmaxes, dtype=float)
        if p.ndim != 2 or p.shape[0] == 0:
            raise InvalidInputError("a round needs a non-empty batch of softmax vectors")
        q_hat = self.current_estimate(q_true)
        probs = reweight_batch(p, self.q0, q_hat)
        if self.config.predict == "argmax":
            preds = probs.argmax(axis=1)
        else:
            u = self.rng.random((len(probs), 1))
            preds = np.minimum((probs.cumsum(axis=1) < u).sum(axis=1), self.k - 1)
        s_t = batch_estimate(self.conf, p)
        flags = {}
        if self.oracle is not None:
            if self.config.per_sample_updates:
                for row in p:
                    self.oracle.update(self.conf.inverse @ row)
            else:
                self.oracle.update(s_t)
            if isinstance(self.oracle, LowSwitchRegressor):
                flags = {"switched": self.oracle.last_switched, "restart": self.oracle.last_restart}
        return q_hat, preds, s_t, flags


@dataclass
class UolsRun:
    config: UolsConfig
    records: list[RoundRecord]
    conf: ConfusionMatrix
    switches: int | None = None
    restarts: int | None = None


def run_uols(
    config: UolsConfig,
    holdout: SoftmaxStream,
    target: SoftmaxStream,
    schedule: ShiftSchedule,
    q0=None,
) -> UolsRun:
    """Run one UOLS trajectory of ``config.horizon`` rounds.

    The label stream depends only on ``config.seed`` and the schedule, so
    every method run with the same seed sees the same samples.
    """
    if schedule.horizon < config.horizon:
        raise InvalidParameterError("schedule is shorter than the horizon")
    conf = build_confusion(*holdout.arrays(), k=holdout.k)
    q0 = holdout.label_marginal() if q0 is None else np.asarray(q0, dtype=float)
    ss = np.random.SeedSequence([config.seed, 0x0175])
    r_pool, r_label, r_pred = (np.random.default_rng(s) for s in ss.spawn(3))
    pools = target.sampler(r_pool)
    learner = RegressAndReweight(config, conf, q0, r_pred)
    k = len(q0)
    records = []
    for t in range(1, config.horizon + 1):
        q_true = schedule.marginal_at(t)
        labels = r_label.choice(k, size=config.per_step, p=q_true)
        softmaxes = pools.draw(labels)
        q_hat, preds, s_t, flags = learner.step(softmaxes, q_true=q_true)
        records.append(RoundRecord(t, q_true, q_hat, preds, labels, s_t,
                                   switched=flags.get("switched"), restart=flags.get("restart")))
    run = UolsRun(config, records, conf)
    if isinstance(learner.oracle, LowSwitchRegressor):
        run.switches = learner.oracle.count_switches()
        run.restarts = len(learner.oracle.restarts)
    return run
