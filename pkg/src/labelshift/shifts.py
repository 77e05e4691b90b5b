"""Label-marginal schedules mixing two anchor marginals.

At round ``t`` (1-based) the marginal is ``(1 - a_t) * mu1 + a_t * mu2``.
The mixing coefficient follows one of four patterns:

mon  ``a_t = t / T``
sin  ``a_t = sin(pi * (t mod L) / L)``
ber  ``a_1 = a0``; afterwards ``a_t`` flips to ``1 - a_{t-1}`` with probability ``p``
squ  ``a_1 = a0``; flips every ``L`` rounds

Defaults are ``L = floor(sqrt(T))`` and ``p = 1 / sqrt(T)``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .simplex import is_simplex, total_variation

KINDS = ("mon", "sin", "ber", "squ")
DEFAULT_ANCHOR_EPS = 0.05


def corner_anchors(k: int, eps: float = DEFAULT_ANCHOR_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Two marginals putting ``1 - (K-1) eps`` on the first and the last class respectively."""
    if not 0 <= eps * (k - 1) < 1:
        raise InvalidParameterError(f"eps={eps} is not admissible for K={k}")
    mu1 = np.full(k, eps)
    mu1[0] = 1 - (k - 1) * eps
    mu2 = np.full(k, eps)
    mu2[-1] = 1 - (k - 1) * eps
    return mu1, mu2


@dataclass
class ShiftSchedule:
    kind: str
    mu1: np.ndarray
    mu2: np.ndarray
    alpha: np.ndarray  # (T,), alpha[t-1] is round t
    params: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.alpha)

    @property
    def marginals(self) -> np.ndarray:
        a = self.alpha[:, None]
        return (1 - a) * self.mu1 + a * self.mu2

    def marginal_at(self, t: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise InvalidInputError(f"round {t} outside 1..{self.horizon}")
        a = self.alpha[t - 1]
        return (1 - a) * self.mu1 + a * self.mu2

    def total_variation(self) -> float:
        return total_variation(self.marginals)


def marginal_at(schedule: ShiftSchedule, t: int) -> np.ndarray:
    return schedule.marginal_at(t)


def make_schedule(
    kind: str,
    T: int,
    seed: int | np.random.Generator | None = 0,
    anchors: tuple | None = None,
    k: int = 3,
    period: int | None = None,
    flip_prob: float | None = None,
    alpha0: float = 0.0,
) -> ShiftSchedule:
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown shift kind {kind!r}; expected one of {KINDS}")
    if T < 1:
        raise InvalidParameterError(f"T must be >= 1, got {T}")
    if anchors is None:
        mu1, mu2 = corner_anchors(k)
    else:
        mu1, mu2 = (np.asarray(a, dtype=float) for a in anchors)
        if mu1.shape != mu2.shape or not (is_simplex(mu1, 1e-9) and is_simplex(mu2, 1e-9)):
            raise InvalidParameterError("anchors must be two probability vectors of equal length")
    L = max(1, math.isqrt(T)) if period is None else int(period)
    p = 1 / math.sqrt(T) if flip_prob is None else float(flip_prob)
    if L < 1:
        raise InvalidParameterError(f"period must be >= 1, got {L}")
    if not 0 <= p <= 1:
        raise InvalidParameterError(f"flip probability must be in [0,1], got {p}")
    if not 0 <= alpha0 <= 1:
        raise InvalidParameterError(f"alpha0 must be in [0,1], got {alpha0}")

    t = np.arange(1, T + 1)
    if kind == "mon":
        alpha = t / T
        params = {}
    elif kind == "sin":
        alpha = np.sin(np.pi * (t % L) / L)
        params = {"period": L}
    elif kind == "squ":
        alpha = np.where(((t - 1) // L) % 2 == 0, alpha0, 1 - alpha0)
        params = {"period": L, "alpha0": alpha0}
    else:
        rng = np.random.default_rng(seed)
        flips = rng.random(T) < p
        flips[0] = False
        parity = np.cumsum(flips) % 2
        alpha = np.where(parity == 0, alpha0, 1 - alpha0)
        params = {"flip_prob": p, "alpha0": alpha0}
    # sin(pi) rounding can leave tiny negatives
    alpha = np.clip(alpha.astype(float), 0.0, 1.0)
    return ShiftSchedule(kind, mu1, mu2, alpha, params)


def count_flips(schedule: ShiftSchedule) -> int:
    return int(np.count_nonzero(np.diff(schedule.alpha)))
