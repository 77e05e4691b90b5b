"""Low switching through phased averaging.

Wraps any :class:`~labelshift.regression.OnlineRegressor` so that its
output only changes on a doubling schedule inside a segment, plus whenever
a drift test says the segment has stopped being stationary. The drift test
compares the frozen output against the inner oracle's unconstrained
estimates; once their accumulated squared gap exceeds
``5 K sigma^2 log(2T/delta)`` the segment is closed, the inner oracle is
restarted and the output jumps to the latest observation.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .regression import OnlineRegressor


@dataclass(frozen=True)
class LpaConfig:
    delta: float = 0.05
    sigma_sq: float = 0.1
    horizon: int = 1000
    dim: int = 3

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidParameterError(f"delta must be in (0, 1), got {self.delta}")
        if not self.sigma_sq >= 0:
            raise InvalidParameterError(f"sigma_sq must be >= 0, got {self.sigma_sq}")
        if self.horizon < 1:
            raise InvalidParameterError(f"horizon must be >= 1, got {self.horizon}")
        if self.dim < 1:
            raise InvalidParameterError(f"dim must be >= 1, got {self.dim}")

    @property
    def threshold(self) -> float:
        # natural log
        return 5 * self.dim * self.sigma_sq * math.log(2 * self.horizon / self.delta)


@dataclass(frozen=True)
class SwitchEvent:
    round: int
    reason: str  # "restart" or "refresh"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


class LowSwitchRegressor(OnlineRegressor):
    """Phased-averaging wrapper around ``inner``.

    ``switch_log`` holds one event per update that changed the output value.
    ``restarts`` holds every round on which the drift test fired, even when
    the new output happens to equal the old one.

    The drift statistic is ``sum_{j=b+1}^t ||prev - est_j||^2`` evaluated
    with the *current* ``prev``; it is kept exactly through the window's
    count, sum and sum of squared norms of the inner estimates.
    """

    def __init__(self, inner: OnlineRegressor, config: LpaConfig):
        if inner.dim != config.dim:
            raise InvalidParameterError(f"inner oracle has dim {inner.dim}, config has {config.dim}")
        super().__init__(config.dim)
        self.inner = inner
        self.config = config
        self.threshold = config.threshold
        self.reset()

    def reset(self) -> None:
        self.inner.reset()
        self.t = 1
        self.b = 1
        self.prev = np.zeros(self.dim)
        self.switch_log: list[SwitchEvent] = []
        self.restarts: list[int] = []
        self.last_restart = False
        self.last_switched = False
        self._new_segment()

    def _new_segment(self) -> None:
        self._est_n = 0
        self._est_sum = np.zeros(self.dim)
        self._est_sq = 0.0
        self._z_sum = np.zeros(self.dim)
        self._z_n = 0

    @property
    def drift_stat(self) -> float:
        if self._est_n == 0:
            return 0.0
        p = self.prev
        val = self._est_n * float(p @ p) - 2.0 * float(p @ self._est_sum) + self._est_sq
        return max(val, 0.0)

    def predict(self) -> np.ndarray:
        return self.prev.copy()

    def update(self, z) -> None:
        z = self._check(z)
        t = self.t
        est = self.inner.predict()
        if t >= self.b + 1:
            self._est_n += 1
            self._est_sum += est
            self._est_sq += float(est @ est)
        self._z_sum += z
        self._z_n += 1

        old = self.prev
        self.last_restart = False
        reason = None
        if self.drift_stat > self.threshold:
            self.b = t + 1
            self.prev = z.copy()
            self.inner.reset()
            self._new_segment()
            self.restarts.append(t)
            self.last_restart = True
            reason = "restart"
        elif _is_power_of_two(t - self.b + 1):
            self.prev = self._z_sum / self._z_n
            reason = "refresh"

        self.last_switched = reason is not None and not np.array_equal(old, self.prev)
        if self.last_switched:
            self.switch_log.append(SwitchEvent(t, reason))
        self.inner.update(z)
        self.t = t + 1

    def count_switches(self) -> int:
        return len(self.switch_log)


def count_switches(oracle: LowSwitchRegressor) -> int:
    return oracle.count_switches()
