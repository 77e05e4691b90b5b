"""Confusion matrices and black-box marginal estimates ``s = C^{-1} f0(x)``."""
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHoldoutError, InvalidInputError, SingularConfusionError

SIGMA_MIN_FLOOR = 1e-6


@dataclass(frozen=True)
class ConfusionMatrix:
    """Soft confusion matrix; column ``j`` is the mean softmax over holdout examples of class ``j``."""

    matrix: np.ndarray
    sigma_min: float
    inverse: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


def confusion_from_matrix(matrix, floor: float = SIGMA_MIN_FLOOR, counts=None) -> ConfusionMatrix:
    c = np.asarray(matrix, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidInputError(f"confusion matrix must be square, got shape {c.shape}")
    sigma_min = float(np.linalg.svd(c, compute_uv=False).min())
    if sigma_min < floor:
        raise SingularConfusionError(f"sigma_min(C) = {sigma_min:.3g} is below the floor {floor:g}")
    inv = np.linalg.inv(c)
    if counts is None:
        counts = np.zeros(c.shape[0], dtype=int)
    return ConfusionMatrix(c, sigma_min, inv, np.asarray(counts))


def build_confusion(softmaxes, labels, k: int | None = None, floor: float = SIGMA_MIN_FLOOR) -> ConfusionMatrix:
    """Build the soft confusion matrix from holdout classifier outputs.

    ``softmaxes`` is ``(n, K)``; ``labels`` are 0-based class indices.
    Every class needs at least one holdout example.
    """
    p = np.asarray(softmaxes, dtype=float)
    y = np.asarray(labels, dtype=int)
    if p.ndim != 2 or p.shape[0] != y.shape[0]:
        raise InvalidInputError("softmaxes and labels disagree in length")
    k = p.shape[1] if k is None else k
    counts = np.bincount(y, minlength=k)
    missing = np.nonzero(counts == 0)[0]
    if missing.size:
        raise InsufficientHoldoutError(f"no holdout examples for classes {missing.tolist()}")
    sums = np.zeros((k, k))
    np.add.at(sums, y, p)
    c = (sums / counts[:, None]).T
    return confusion_from_matrix(c, floor=floor, counts=counts)


def build_confusion_from_model(model, x, labels, floor: float = SIGMA_MIN_FLOOR) -> ConfusionMatrix:
    return build_confusion(model.predict_proba(x), labels, k=model.k, floor=floor)


def estimate_marginal(conf: ConfusionMatrix, softmax) -> np.ndarray:
    """Unbiased (possibly negative) estimate of the current label marginal."""
    return conf.inverse @ np.asarray(softmax, dtype=float)


def batch_estimate(conf: ConfusionMatrix, softmaxes) -> np.ndarray:
    p = np.asarray(softmaxes, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise InvalidInputError("batch_estimate needs a non-empty batch")
    return conf.inverse @ p.mean(axis=0)
