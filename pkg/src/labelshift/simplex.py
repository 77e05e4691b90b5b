"""Probability-vector primitives: simplex membership, projection, clipping, total variation."""
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

SUM_TOL = 1e-9


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("vector has non-finite entries")
    return arr


def is_simplex(v, tol: float = SUM_TOL) -> bool:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        return False
    return bool(np.all(arr >= -tol) and np.all(arr <= 1 + tol) and abs(arr.sum() - 1.0) <= tol)


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex.

    Sort-and-threshold method (Held et al. / Duchi et al.): find the largest
    ``rho`` with ``u_rho > (sum_{i<=rho} u_i - 1) / rho`` on the sorted vector
    and shift everything by that threshold.
    """
    v = as_vector(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    # guard against drift in the last ulp
    return w / w.sum()


def clip_floor(q, mu: float) -> np.ndarray:
    """Raise every entry of ``q`` to at least ``mu``, then renormalise.

    When ``mu * K == 1`` the only admissible vector is uniform, which is what
    is returned. Otherwise entries of the result are bounded below by
    ``mu / (1 + (K - 1) mu)``, which keeps every ratio of two clipped
    vectors inside ``[mu, 1/mu]``.
    """
    q = as_vector(q)
    k = q.size
    if not (mu > 0):
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    if mu * k > 1 + 1e-12:
        raise InvalidParameterError(f"mu * K = {mu * k} exceeds 1")
    if np.all(q >= mu):
        return q.copy()
    if abs(mu * k - 1) <= 1e-12:
        return uniform(k)
    clipped = np.maximum(q, mu)
    return clipped / clipped.sum()


def total_variation(schedule: Sequence) -> float:
    """Sum of L1 distances between consecutive vectors."""
    arr = np.asarray(schedule, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidInputError("total_variation needs a non-empty sequence of vectors")
    if arr.shape[0] == 1:
        return 0.0
    return float(np.abs(np.diff(arr, axis=0)).sum())


def floor_renormalize(v) -> np.ndarray | None:
    """Zero out negative entries and renormalise; ``None`` if nothing is left."""
    w = np.maximum(as_vector(v), 0.0)
    s = w.sum()
    if s <= 0:
        return None
    return w / s
