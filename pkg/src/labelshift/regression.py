"""Online regression oracles.

An oracle sees noisy vectors ``z_1, z_2, ...`` one at a time and, before
each new observation, predicts the current value of the drifting signal
underneath. Three oracles are provided:

* :class:`FLHFTL` -- Follow-the-Leading-History over running-mean experts,
  one expert started per round, combined with exponential weights on the
  squared error.
* :class:`RunningAverage` -- mean of everything seen so far (FTH).
* :class:`WindowAverage` -- mean of the last ``k`` observations (FTFWH).

All oracles predict the zero vector before their first update.
"""
from abc import ABC, abstractmethod
from collections import deque
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError


class OnlineRegressor(ABC):
    """Minimal protocol: ``predict`` the next value, ``update`` with an observation."""

    def __init__(self, dim: int):
        if dim < 1:
            raise InvalidParameterError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)

    @abstractmethod
    def predict(self) -> np.ndarray:
        ...

    @abstractmethod
    def update(self, z) -> None:
        ...

    @abstractmethod
    def reset(self) -> None:
        ...

    def _check(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise InvalidInputError(f"expected observation of shape ({self.dim},), got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise InvalidInputError("observation has non-finite entries")
        return z


class FLHFTL(OnlineRegressor):
    """Follow-the-Leading-History with follow-the-leader base experts.

    Expert ``j`` is born at round ``j`` and predicts the mean of
    ``z_j .. z_{t-1}`` at round ``t`` (zero on its birth round). Weights are
    updated multiplicatively with ``exp(-lr * ||x_j - z||^2)`` and then the
    newborn expert for the next round receives mass ``1/(t+1)``.

    Every expert is retained, so a round costs O(t * dim) and a run of
    length T costs O(T^2 * dim). Expert means are read off a prefix-sum
    table; weights live in log space.
    """

    def __init__(self, dim: int, lr: float):
        super().__init__(dim)
        if not (lr >= 0) or not np.isfinite(lr):
            raise InvalidParameterError(f"learning rate must be a finite non-negative number, got {lr}")
        self.lr = float(lr)
        self.reset()

    def reset(self) -> None:
        self.t = 1
        cap = 64
        # prefix[j] = z_1 + ... + z_j (prefix[0] = 0)
        self._prefix = np.zeros((cap + 1, self.dim))
        self._log_w = np.zeros(cap)
        self._log_w[0] = 0.0

    @property
    def n_experts(self) -> int:
        return self.t

    @property
    def weights(self) -> np.ndarray:
        lw = self._log_w[: self.t]
        w = np.exp(lw - lw.max())
        return w / w.sum()

    def expert_predictions(self) -> np.ndarray:
        """Predictions of experts 1..t at the current round, shape ``(t, dim)``."""
        t = self.t
        starts = np.arange(1, t + 1)
        counts = (t - starts).astype(float)
        sums = self._prefix[t - 1] - self._prefix[starts - 1]
        out = np.zeros((t, self.dim))
        live = counts > 0
        out[live] = sums[live] / counts[live, None]
        return out

    def predict(self) -> np.ndarray:
        return self.weights @ self.expert_predictions()

    def update(self, z) -> None:
        z = self._check(z)
        t = self.t
        preds = self.expert_predictions()
        loss = np.sum((preds - z) ** 2, axis=1)
        lw = self._log_w[:t] - self.lr * loss
        lw = lw - lw.max()
        lw = lw - np.log(np.exp(lw).sum())
        # addition step: old experts shrink by t/(t+1), newborn gets 1/(t+1)
        lw = lw + np.log1p(-1.0 / (t + 1))
        self._grow(t + 1)
        self._log_w[:t] = lw
        self._log_w[t] = -np.log(t + 1.0)
        self._prefix[t] = self._prefix[t - 1] + z
        self.t = t + 1

    def _grow(self, n: int) -> None:
        if n <= self._log_w.size:
            return
        cap = max(n, 2 * self._log_w.size)
        lw = np.zeros(cap)
        lw[: self._log_w.size] = self._log_w
        prefix = np.zeros((cap + 1, self.dim))
        prefix[: self._prefix.shape[0]] = self._prefix
        self._log_w, self._prefix = lw, prefix


def flh_learning_rate(dim: int, sigma_min: float | None = None) -> float:
    """Exp-concavity learning rate: ``sigma_min^2 / (8K)``, or ``1/(8K)`` without a confusion matrix."""
    if sigma_min is None:
        return 1.0 / (8 * dim)
    return sigma_min**2 / (8 * dim)


class RunningAverage(OnlineRegressor):
    """Follow-the-history: mean of all observations so far."""

    def __init__(self, dim: int):
        super().__init__(dim)
        self.reset()

    def reset(self) -> None:
        self._sum = np.zeros(self.dim)
        self._n = 0

    def predict(self) -> np.ndarray:
        if self._n == 0:
            return np.zeros(self.dim)
        return self._sum / self._n

    def update(self, z) -> None:
        self._sum = self._sum + self._check(z)
        self._n += 1


class WindowAverage(OnlineRegressor):
    """Follow-the-fixed-window-history: mean of the last ``window`` observations."""

    def __init__(self, dim: int, window: int = 100):
        super().__init__(dim)
        if window < 1:
            raise InvalidParameterError(f"window must be >= 1, got {window}")
        self.window = int(window)
        self.reset()

    def reset(self) -> None:
        self._buf: deque = deque(maxlen=self.window)

    def predict(self) -> np.ndarray:
        if not self._buf:
            return np.zeros(self.dim)
        return np.mean(np.asarray(self._buf), axis=0)

    def update(self, z) -> None:
        self._buf.append(self._check(z))


def running_average_predict(history: Sequence, dim: int | None = None) -> np.ndarray:
    if len(history) == 0:
        if dim is None:
            raise InvalidInputError("dim is required for an empty history")
        return np.zeros(dim)
    return np.mean(np.asarray(history, dtype=float), axis=0)


def window_average_predict(history: Sequence, window: int, dim: int | None = None) -> np.ndarray:
    if window < 1:
        raise InvalidParameterError(f"window must be >= 1, got {window}")
    return running_average_predict(list(history)[-window:], dim)
