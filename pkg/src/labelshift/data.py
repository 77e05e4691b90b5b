"""Synthetic Gaussian data, per-class sampling pools and softmax-stream files.

File formats (UTF-8, comma separated, no quoting, 1-based labels):

* softmax stream: header ``label,p1,...,pK``
* synthetic dump: header ``label,x1,...,xd``
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataExhaustedError,
    IncompleteStreamError,
    InvalidInputError,
    InvalidParameterError,
    StreamParseError,
)
from .model import SoftmaxLinearModel, TrainerConfig, train_weighted

log = logging.getLogger(__name__)

SYNTHETIC_SCALE = 0.215
SYNTHETIC_DIM = 12
SYNTHETIC_K = 3
# Seed for the class centres. The centres are random unit vectors and their
# geometry sets how hard the task is; see README, "Calibration".
DEFAULT_DATA_SEED = 23


@dataclass
class GaussianMixtureSource:
    """Class-conditional isotropic Gaussians ``N(center_k, scale * I)``."""

    centers: np.ndarray  # (K, d), unit rows
    scale: float = SYNTHETIC_SCALE

    def __post_init__(self):
        if not self.scale >= 0:
            raise InvalidParameterError(f"scale must be non-negative, got {self.scale}")

    @classmethod
    def random(cls, k: int = SYNTHETIC_K, d: int = SYNTHETIC_DIM, scale: float = SYNTHETIC_SCALE,
               seed: int = DEFAULT_DATA_SEED) -> "GaussianMixtureSource":
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((k, d))
        c /= np.linalg.norm(c, axis=1, keepdims=True)
        return cls(c, scale)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def sample(self, label: int, n: int, rng: np.random.Generator) -> np.ndarray:
        if not 0 <= label < self.k:
            raise InvalidInputError(f"label {label} out of range for K={self.k}")
        return self.centers[label] + np.sqrt(self.scale) * rng.standard_normal((n, self.d))

    def sample_labels(self, labels, rng: np.random.Generator) -> np.ndarray:
        labels = np.asarray(labels, dtype=int)
        return self.centers[labels] + np.sqrt(self.scale) * rng.standard_normal((len(labels), self.d))


def sample_synthetic(source: GaussianMixtureSource, label: int, rng: np.random.Generator) -> np.ndarray:
    return source.sample(label, 1, rng)[0]


class ClassPools:
    """Per-class item pools drawn without replacement.

    ``items[k]`` is an array whose rows are the items of class ``k``; each
    pool is shuffled once by ``rng`` and then consumed front to back.
    """

    def __init__(self, items: list[np.ndarray], rng: np.random.Generator):
        self.items = [np.asarray(a)[rng.permutation(len(a))] for a in items]
        self.cursor = [0] * len(items)

    @property
    def k(self) -> int:
        return len(self.items)

    def remaining(self, label: int) -> int:
        return len(self.items[label]) - self.cursor[label]

    def draw(self, labels) -> np.ndarray:
        labels = np.asarray(labels, dtype=int)
        out = []
        for lab in labels:
            c = self.cursor[lab]
            if c >= len(self.items[lab]):
                raise DataExhaustedError(f"pool for class {lab + 1} exhausted after {c} draws")
            out.append(self.items[lab][c])
            self.cursor[lab] = c + 1
        return np.asarray(out)


@dataclass
class SoftmaxStream:
    """Precomputed classifier outputs grouped by true class."""

    pools: list[np.ndarray]  # pools[k] is (n_k, K)

    @property
    def k(self) -> int:
        return len(self.pools)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """All rows as ``(softmaxes, labels)`` with 0-based labels."""
        p = np.concatenate(self.pools) if self.pools else np.zeros((0, 0))
        y = np.concatenate([np.full(len(a), k) for k, a in enumerate(self.pools)])
        return p, y

    def label_marginal(self) -> np.ndarray:
        n = np.array([len(a) for a in self.pools], dtype=float)
        return n / n.sum()

    def sampler(self, rng: np.random.Generator) -> ClassPools:
        return ClassPools(self.pools, rng)

    @classmethod
    def from_arrays(cls, softmaxes, labels, k: int | None = None) -> "SoftmaxStream":
        p = np.asarray(softmaxes, dtype=float)
        y = np.asarray(labels, dtype=int)
        k = p.shape[1] if k is None else k
        pools = [p[y == j] for j in range(k)]
        empty = [j + 1 for j in range(k) if len(pools[j]) == 0]
        if empty:
            raise IncompleteStreamError(f"no rows for classes {empty}")
        return cls(pools)


def load_softmax_stream(path) -> SoftmaxStream:
    """Read a ``label,p1..pK`` CSV.

    Rows whose probabilities sum to within 1% of one are renormalised; any
    other row is rejected with its line number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IncompleteStreamError(f"{path} is empty")
        if len(header) < 2 or header[0].strip() != "label":
            raise StreamParseError("header must be label,p1,...,pK", line=1)
        k = len(header) - 1
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 1:
                raise StreamParseError(f"expected {k + 1} fields, got {len(row)}", line=lineno)
            try:
                lab = int(row[0])
                p = np.array([float(v) for v in row[1:]])
            except ValueError as exc:
                raise StreamParseError(str(exc), line=lineno) from None
            if not 1 <= lab <= k:
                raise StreamParseError(f"label {lab} outside 1..{k}", line=lineno)
            if not np.all(np.isfinite(p)) or np.any(p < 0):
                raise StreamParseError("probabilities must be finite and non-negative", line=lineno)
            s = p.sum()
            if not 0.99 <= s <= 1.01:
                raise StreamParseError(f"probabilities sum to {s:.4g}, not 1", line=lineno)
            rows.append(p / s)
            labels.append(lab - 1)
    if not rows:
        raise IncompleteStreamError(f"{path} has no data rows")
    return SoftmaxStream.from_arrays(np.asarray(rows), np.asarray(labels), k)


def write_softmax_stream(path, stream: SoftmaxStream) -> None:
    p, y = stream.arrays()
    _write_labeled(path, "p", p, y)


def write_features(path, x, y) -> None:
    _write_labeled(path, "x", np.asarray(x), np.asarray(y))


def _write_labeled(path, prefix: str, values: np.ndarray, labels: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"{prefix}{i + 1}" for i in range(values.shape[1])])
        for lab, row in zip(labels, values):
            w.writerow([int(lab) + 1] + [repr(float(v)) for v in row])


@dataclass
class SyntheticBenchmark:
    """Everything an online run needs from the synthetic Gaussian setup.

    ``target_x[k]`` is the pool of target-time covariates for class ``k``.
    """

    source: GaussianMixtureSource
    base_model: SoftmaxLinearModel
    q0: np.ndarray
    train_x: np.ndarray
    train_y: np.ndarray
    holdout_x: np.ndarray
    holdout_y: np.ndarray
    target_x: list[np.ndarray] = field(repr=False)

    def holdout_stream(self) -> SoftmaxStream:
        return SoftmaxStream.from_arrays(self.base_model.predict_proba(self.holdout_x), self.holdout_y,
                                         self.source.k)

    def target_stream(self) -> SoftmaxStream:
        return SoftmaxStream([self.base_model.predict_proba(x) for x in self.target_x])

    def source_accuracy(self, n_per_class: int, rng: np.random.Generator) -> float:
        labels = np.repeat(np.arange(self.source.k), n_per_class)
        x = self.source.sample_labels(labels, rng)
        return float((self.base_model.predict(x) == labels).mean())


def make_synthetic_benchmark(
    seed: int,
    data_seed: int = DEFAULT_DATA_SEED,
    n_source_per_class: int = 20_000,
    n_target_per_class: int = 12_000,
    train_frac: float = 0.8,
    holdout_frac: float = 0.1,
    trainer: TrainerConfig = TrainerConfig(),
    scale: float = SYNTHETIC_SCALE,
    k: int = SYNTHETIC_K,
    d: int = SYNTHETIC_DIM,
) -> SyntheticBenchmark:
    """Draw source data, split it, fit the base classifier and draw target pools.

    The source set is split ``train_frac : 1 - train_frac`` into training and
    holdout; only ``holdout_frac`` of the holdout part is kept for the
    confusion matrix. ``q0`` is the label marginal of the training split.
    """
    if not 0 < train_frac < 1 or not 0 < holdout_frac <= 1:
        raise InvalidParameterError("train_frac must be in (0,1) and holdout_frac in (0,1]")
    source = GaussianMixtureSource.random(k, d, scale, data_seed)
    ss = np.random.SeedSequence([seed, 0x5EED])
    r_src, r_split, r_train, r_tgt = (np.random.default_rng(s) for s in ss.spawn(4))

    y = np.repeat(np.arange(k), n_source_per_class)
    x = source.sample_labels(y, r_src)
    perm = r_split.permutation(len(y))
    x, y = x[perm], y[perm]
    n_train = int(round(train_frac * len(y)))
    n_hold = int(round(holdout_frac * (len(y) - n_train)))
    train_x, train_y = x[:n_train], y[:n_train]
    holdout_x, holdout_y = x[n_train : n_train + n_hold], y[n_train : n_train + n_hold]

    model = train_weighted(SoftmaxLinearModel.zeros(k, d), train_x, train_y, cfg=trainer, rng=r_train)
    q0 = np.bincount(train_y, minlength=k) / len(train_y)
    target_x = [source.sample(j, n_target_per_class, r_tgt) for j in range(k)]
    return SyntheticBenchmark(source, model, q0, train_x, train_y, holdout_x, holdout_y, target_x)
