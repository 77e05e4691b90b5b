"""Per-round records and run-level scoring."""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .simplex import total_variation


@dataclass
class RoundRecord:
    t: int
    q_true: np.ndarray
    q_hat: np.ndarray
    predicted: np.ndarray
    labels: np.ndarray  # consulted for scoring only
    estimate: np.ndarray | None = None  # s_t fed to the oracle
    switched: bool | None = None
    restart: bool | None = None
    refit: bool | None = None

    @property
    def n_correct(self) -> int:
        return int(np.count_nonzero(self.predicted == self.labels))

    @property
    def n_total(self) -> int:
        return len(self.labels)


@dataclass
class RunMetrics:
    error: float
    mse: float
    v_t: float
    n_rounds: int
    n_samples: int
    switches: int | None = None
    restarts: int | None = None
    refits: int | None = None
    per_round_error: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        d = {"error": self.error, "mse": self.mse, "v_t": self.v_t, "n_rounds": self.n_rounds,
             "n_samples": self.n_samples}
        for key in ("switches", "restarts", "refits"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d


def _count(records, attr):
    vals = [getattr(r, attr) for r in records]
    if all(v is None for v in vals):
        return None
    return int(sum(bool(v) for v in vals))


def score_run(records: Sequence[RoundRecord]) -> RunMetrics:
    """Misclassification rate over all samples and mean squared marginal error over rounds."""
    if not records:
        raise InvalidInputError("cannot score an empty trajectory")
    correct = sum(r.n_correct for r in records)
    total = sum(r.n_total for r in records)
    q_true = np.array([r.q_true for r in records])
    q_hat = np.array([r.q_hat for r in records])
    mse = float(np.mean(np.sum((q_hat - q_true) ** 2, axis=1)))
    per_round = np.array([1 - r.n_correct / r.n_total if r.n_total else 0.0 for r in records])
    return RunMetrics(
        error=1 - correct / total if total else 0.0,
        mse=mse,
        v_t=total_variation(q_true),
        n_rounds=len(records),
        n_samples=total,
        switches=_count(records, "switched"),
        restarts=_count(records, "restart"),
        refits=_count(records, "refit"),
        per_round_error=per_round,
    )
