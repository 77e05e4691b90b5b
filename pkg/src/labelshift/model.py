"""Multiclass softmax regression trained with (importance-weighted) momentum SGD."""
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, TrainingDivergedError


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class SoftmaxLinearModel:
    weights: np.ndarray  # (K, d)
    bias: np.ndarray  # (K,)

    @classmethod
    def zeros(cls, k: int, d: int) -> "SoftmaxLinearModel":
        return cls(np.zeros((k, d)), np.zeros(k))

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "SoftmaxLinearModel":
        return SoftmaxLinearModel(self.weights.copy(), self.bias.copy())

    def logits(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features contain non-finite values")
        return x @ self.weights.T + self.bias

    def predict_proba(self, x) -> np.ndarray:
        """Class probabilities for one feature vector ``(d,)`` or a batch ``(n, d)``."""
        return softmax(self.logits(x))

    def predict(self, x) -> np.ndarray:
        return self.logits(x).argmax(axis=-1)


def predict_proba(model: SoftmaxLinearModel, x) -> np.ndarray:
    return model.predict_proba(x)


@dataclass(frozen=True)
class TrainerConfig:
    lr: float = 0.1
    momentum: float = 0.9
    batch_size: int = 200
    l2: float = 1e-4
    epochs: int = 1

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidParameterError(f"learning rate must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise InvalidParameterError(f"batch size must be >= 1, got {self.batch_size}")
        if self.momentum < 0 or self.l2 < 0 or self.epochs < 0:
            raise InvalidParameterError("momentum, l2 and epochs must be non-negative")


def _normalizer(weights: np.ndarray) -> float:
    total = float(weights.sum())
    if not total > 0 or np.any(weights < 0):
        raise InvalidInputError("example weights must be non-negative and not all zero")
    return total


def objective(model: SoftmaxLinearModel, x, y, weights=None, l2: float = 0.0) -> float:
    """Weighted mean cross-entropy ``sum w_i CE_i / sum w_i`` plus ``l2/2 * ||params||^2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    logits = model.logits(x)
    m = logits.max(axis=1, keepdims=True)
    logz = (m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True)))[:, 0]
    ce = logz - logits[np.arange(len(y)), y]
    reg = 0.5 * l2 * (np.sum(model.weights**2) + np.sum(model.bias**2))
    return float(w @ ce) / _normalizer(w) + reg


def gradient(model: SoftmaxLinearModel, x, y, weights=None, l2: float = 0.0, scale: float | None = None):
    """Gradient of :func:`objective` with respect to ``(weights, bias)``.

    ``scale`` replaces ``sum(weights)`` as the normaliser; minibatch SGD uses
    ``batch_len * mean_weight_over_dataset`` so the step is an unbiased
    estimate of the full-data gradient.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    norm = _normalizer(w) if scale is None else scale
    p = model.predict_proba(x)
    p[np.arange(len(y)), y] -= 1.0
    p *= (w / norm)[:, None]
    gw = p.T @ x + l2 * model.weights
    gb = p.sum(axis=0) + l2 * model.bias
    return gw, gb


class MomentumSGD:
    """Heavy-ball SGD whose velocity persists across calls (for continual training)."""

    def __init__(self, model: SoftmaxLinearModel, cfg: TrainerConfig):
        self.model = model
        self.cfg = cfg
        self.vw = np.zeros_like(model.weights)
        self.vb = np.zeros_like(model.bias)

    def step(self, x, y, weights=None, scale: float | None = None) -> None:
        gw, gb = gradient(self.model, x, y, weights, self.cfg.l2, scale)
        self.vw = self.cfg.momentum * self.vw - self.cfg.lr * gw
        self.vb = self.cfg.momentum * self.vb - self.cfg.lr * gb
        self.model.weights = self.model.weights + self.vw
        self.model.bias = self.model.bias + self.vb
        if not (np.all(np.isfinite(self.model.weights)) and np.all(np.isfinite(self.model.bias))):
            raise TrainingDivergedError("parameters became non-finite during SGD")


def train_weighted(
    model: SoftmaxLinearModel,
    x,
    y,
    weights=None,
    cfg: TrainerConfig = TrainerConfig(),
    rng: np.random.Generator | int | None = 0,
) -> SoftmaxLinearModel:
    """Fit ``model`` (a copy is returned) by minibatch momentum SGD on the weighted objective.

    Examples are visited in a freshly shuffled order each epoch. Passing
    ``weights=None`` is exactly the unweighted objective.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    n = len(y)
    out = model.copy()
    if n == 0 or cfg.epochs == 0:
        return out
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise InvalidInputError("one weight per example is required")
    mean_w = _normalizer(w) / n
    rng = np.random.default_rng(rng)
    opt = MomentumSGD(out, cfg)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            opt.step(x[idx], y[idx], w[idx], scale=len(idx) * mean_w)
    return out


def full_batch_config(cfg: TrainerConfig, n: int) -> TrainerConfig:
    return replace(cfg, batch_size=max(n, 1))
