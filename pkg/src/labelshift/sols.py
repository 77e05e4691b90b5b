"""Supervised online label shift learners.

Labels arrive after each round's predictions. Four learners share one loop:

``werm``   refit from a fixed initialisation every round on the whole pool,
           weighting an example seen at round ``i`` with label ``y`` by
           ``q_hat_t(y) / q_hat_i(y)``.
``lazy``   same objective, but refit only when the (low-switching) marginal
           estimate changed since the previous round.
``ct``     continue training one persistent model on uniform minibatches
           from the pool; no reweighting.
``ct-rs``  continue training on class-balanced minibatches, then reweight
           the softmax by ``q_hat_t / (1/K)`` at prediction time.

The marginal estimate comes from an online regression oracle fed with each
round's empirical label histogram.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .data import ClassPools
from .errors import DegenerateWeightError, InvalidInputError, InvalidParameterError
from .lpa import LowSwitchRegressor, LpaConfig
from .metrics import RoundRecord
from .model import MomentumSGD, SoftmaxLinearModel, TrainerConfig, objective, train_weighted
from .regression import FLHFTL, OnlineRegressor, RunningAverage, WindowAverage
from .shifts import ShiftSchedule
from .simplex import clip_floor, project_simplex

log = logging.getLogger(__name__)

LEARNERS = ("werm", "lazy", "ct", "ct-rs")
_ALIASES = {"lazy-werm": "lazy"}


@dataclass(frozen=True)
class SolsConfig:
    learner: str = "werm"
    n_per_round: int = 50
    horizon: int = 200
    mu: float | None = None  # None -> 0, or 1/(K N) for the lazy learner
    oracle: str = "flh-ftl"
    flh_lr: float | None = None  # None -> 1/K
    window: int = 100
    lpa_delta: float = 0.05
    lpa_sigma_sq: float | None = None  # None -> 1/N
    low_switch: bool | None = None  # wrap the oracle in LPA; None -> only for lazy
    trainer: TrainerConfig = field(default_factory=lambda: TrainerConfig(epochs=30))
    val_frac: float = 0.2
    patience: int = 2
    max_steps: int = 50
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "learner", _ALIASES.get(self.learner, self.learner))
        if self.learner not in LEARNERS:
            raise InvalidParameterError(f"unknown learner {self.learner!r}; expected one of {LEARNERS}")
        if self.n_per_round < 1 or self.horizon < 1:
            raise InvalidParameterError("n_per_round and horizon must be >= 1")
        if self.mu is not None and self.mu < 0:
            raise InvalidParameterError(f"mu must be >= 0, got {self.mu}")
        if self.oracle not in ("flh-ftl", "fth", "ftfwh"):
            raise InvalidParameterError(f"unknown oracle {self.oracle!r}")


def empirical_marginal(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise InvalidInputError("empirical_marginal needs at least one label")
    return np.bincount(labels, minlength=k) / labels.size


class LabeledPool:
    """Every labelled example seen so far plus the marginal estimate in force when it arrived.

    The stored estimates are copies and never rewritten, so the importance
    weight denominators stay those of the observation round.
    """

    def __init__(self, k: int, d: int):
        self.k, self.d = k, d
        self._x: list[np.ndarray] = []
        self._y: list[np.ndarray] = []
        self._val: list[np.ndarray] = []
        self.q_hat: list[np.ndarray] = []
        self.marginals: list[np.ndarray] = []

    def __len__(self) -> int:
        return sum(len(y) for y in self._y)

    @property
    def rounds(self) -> int:
        return len(self._y)

    def add(self, x, y, q_hat, val_mask=None) -> None:
        y = np.asarray(y, dtype=int)
        self._x.append(np.asarray(x, dtype=float))
        self._y.append(y)
        self._val.append(np.zeros(len(y), bool) if val_mask is None else np.asarray(val_mask, bool))
        self.q_hat.append(np.array(q_hat, dtype=float, copy=True))
        self.marginals.append(empirical_marginal(y, self.k))

    def arrays(self):
        """``(x, y, round_index, is_val)`` over the whole pool; round indices are 0-based."""
        if not self._y:
            return np.zeros((0, self.d)), np.zeros(0, int), np.zeros(0, int), np.zeros(0, bool)
        x = np.concatenate(self._x)
        y = np.concatenate(self._y)
        r = np.concatenate([np.full(len(a), i) for i, a in enumerate(self._y)])
        v = np.concatenate(self._val)
        return x, y, r, v


def werm_weights(labels, rounds, frozen_q_hat, q_hat_t) -> np.ndarray:
    """``q_hat_t(y) / q_hat_i(y)`` for each example ``(y, i)``."""
    labels = np.asarray(labels, dtype=int)
    rounds = np.asarray(rounds, dtype=int)
    frozen = np.asarray(frozen_q_hat, dtype=float)
    denom = frozen[rounds, labels]
    if np.any(denom <= 0):
        bad = int(np.argmax(denom <= 0))
        raise DegenerateWeightError(
            f"label {labels[bad] + 1} observed at round {rounds[bad] + 1} had estimated probability 0")
    return np.asarray(q_hat_t, dtype=float)[labels] / denom


class SolsLearner:
    """One supervised learner; call :meth:`begin_round`, then :meth:`predict`, then :meth:`observe`."""

    def __init__(self, config: SolsConfig, k: int, d: int):
        self.config = config
        self.k, self.d = k, d
        self.pool = LabeledPool(k, d)
        self.model = SoftmaxLinearModel.zeros(k, d)
        self.t = 0
        self.prev_q_hat = None
        self.refits = 0
        lr = 1.0 / k if config.flh_lr is None else config.flh_lr
        if config.oracle == "flh-ftl":
            inner = FLHFTL(k, lr)
        elif config.oracle == "fth":
            inner = RunningAverage(k)
        else:
            inner = WindowAverage(k, config.window)
        wrap = config.learner == "lazy" if config.low_switch is None else config.low_switch
        if wrap:
            sigma_sq = 1.0 / config.n_per_round if config.lpa_sigma_sq is None else config.lpa_sigma_sq
            self.oracle = LowSwitchRegressor(inner, LpaConfig(config.lpa_delta, sigma_sq, config.horizon, k))
        else:
            self.oracle = inner
        root = np.random.SeedSequence([config.seed, 0x5015])
        self._split_rng, self._ct_rng = (np.random.default_rng(s) for s in root.spawn(2))
        self._opt = MomentumSGD(self.model, config.trainer) if config.learner in ("ct", "ct-rs") else None

    @property
    def mu(self) -> float:
        # phased averages of raw histograms hit exact zeros, which makes the
        # importance weight of a later observation of that class infinite
        if self.config.mu is None:
            return 1.0 / (self.k * self.config.n_per_round) if self.config.learner == "lazy" else 0.0
        return self.config.mu

    def marginal_estimate(self) -> np.ndarray:
        q = project_simplex(self.oracle.predict())
        if self.mu > 0:
            q = clip_floor(q, self.mu)
        return q

    def begin_round(self) -> dict:
        """Fix this round's marginal estimate and (re)train as the learner prescribes."""
        self.t += 1
        self.q_hat = self.marginal_estimate()
        learner = self.config.learner
        refit = None
        if learner == "werm":
            refit = True
        elif learner == "lazy":
            refit = self.prev_q_hat is None or not np.array_equal(self.q_hat, self.prev_q_hat)
        if refit:
            self.model = self._fit_werm()
            self.refits += 1
        elif learner in ("ct", "ct-rs") and len(self.pool):
            self._continue_training(balanced=learner == "ct-rs")
        self.prev_q_hat = self.q_hat
        return {"refit": refit}

    def _fit_werm(self) -> SoftmaxLinearModel:
        init = SoftmaxLinearModel.zeros(self.k, self.d)
        if not len(self.pool):
            return init
        x, y, r, _ = self.pool.arrays()
        w = werm_weights(y, r, self.pool.q_hat, self.q_hat)
        # per-round seed: a refit depends only on (seed, round, pool, weights)
        rng = np.random.default_rng([self.config.seed, self.t])
        return train_weighted(init, x, y, w, self.config.trainer, rng)

    def _continue_training(self, balanced: bool) -> None:
        x, y, _, is_val = self.pool.arrays()
        tr = np.nonzero(~is_val)[0]
        va = np.nonzero(is_val)[0]
        if tr.size == 0:
            return
        present = np.unique(y[tr])
        if balanced and present.size < self.k:
            log.info("round %d: classes %s absent from the pool, skipped in resampling", self.t,
                     sorted(set(range(self.k)) - set(present.tolist())))
        by_class = [tr[y[tr] == c] for c in present]

        def val_loss():
            if va.size == 0:
                return None
            if balanced:
                counts = np.bincount(y[va], minlength=self.k).astype(float)
                w = 1.0 / counts[y[va]]
            else:
                w = None
            return objective(self.model, x[va], y[va], w)

        rng = self._ct_rng
        bs = self.config.trainer.batch_size
        best = val_loss()
        best_params = (self.model.weights.copy(), self.model.bias.copy())
        bad = 0
        for _ in range(self.config.max_steps):
            if balanced:
                cls = rng.integers(len(by_class), size=bs)
                idx = np.array([by_class[c][rng.integers(len(by_class[c]))] for c in cls])
            else:
                idx = tr[rng.integers(tr.size, size=bs)]
            self._opt.step(x[idx], y[idx])
            cur = val_loss()
            if cur is None:
                continue
            if cur < best:
                best, bad = cur, 0
                best_params = (self.model.weights.copy(), self.model.bias.copy())
            else:
                bad += 1
                if bad >= self.config.patience:
                    break
        if best is not None:
            self.model.weights, self.model.bias = best_params
            self._opt.vw[:] = 0
            self._opt.vb[:] = 0

    def predict(self, x) -> np.ndarray:
        p = self.model.predict_proba(x)
        if self.config.learner == "ct-rs":
            p = p * (self.q_hat * self.k)
        return p.argmax(axis=1)

    def observe(self, x, y) -> np.ndarray:
        """Reveal the round's labels: grow the pool and update the oracle."""
        y = np.asarray(y, dtype=int)
        n = len(y)
        n_val = int(round(self.config.val_frac * n))
        val = np.zeros(n, bool)
        val[self._split_rng.permutation(n)[:n_val]] = True
        self.pool.add(x, y, self.q_hat, val)
        s_t = empirical_marginal(y, self.k)
        self.oracle.update(s_t)
        return s_t


@dataclass
class SolsRun:
    config: SolsConfig
    records: list[RoundRecord]
    refits: int
    models: list[SoftmaxLinearModel] | None = None


def run_sols(config: SolsConfig, pools: list[np.ndarray], schedule: ShiftSchedule, keep_models: bool = False,
             oracle: OnlineRegressor | None = None) -> SolsRun:
    """Run a SOLS trajectory; ``pools[k]`` holds the covariates available for class ``k``.

    ``oracle`` replaces the marginal tracker the config would build.
    """
    if schedule.horizon < config.horizon:
        raise InvalidParameterError("schedule is shorter than the horizon")
    k, d = len(pools), pools[0].shape[1]
    ss = np.random.SeedSequence([config.seed, 0x5015, 1])
    r_pool, r_label = (np.random.default_rng(s) for s in ss.spawn(2))
    sampler = ClassPools(pools, r_pool)
    learner = SolsLearner(config, k, d)
    if oracle is not None:
        learner.oracle = oracle
    records, models = [], []
    for t in range(1, config.horizon + 1):
        q_true = schedule.marginal_at(t)
        labels = r_label.choice(k, size=config.n_per_round, p=q_true)
        x = sampler.draw(labels)
        flags = learner.begin_round()
        if keep_models:
            models.append(learner.model.copy())
        preds = learner.predict(x)
        s_t = learner.observe(x, labels)
        rec = RoundRecord(t, q_true, learner.q_hat, preds, labels, s_t, refit=flags["refit"])
        if isinstance(learner.oracle, LowSwitchRegressor):
            rec.switched = learner.oracle.last_switched
            rec.restart = learner.oracle.last_restart
        records.append(rec)
    return SolsRun(config, records, learner.refits, models if keep_models else None)
