import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from labelshift.errors import InsufficientHoldoutError, InvalidInputError, SingularConfusionError
from labelshift.marginal import batch_estimate, build_confusion, confusion_from_matrix, estimate_marginal


def test_perfect_classifier_identity():
    p = np.eye(3)[[0, 1, 2, 2, 1]]
    conf = build_confusion(p, [0, 1, 2, 2, 1])
    npt.assert_allclose(conf.matrix, np.eye(3))
    assert conf.sigma_min == pytest.approx(1.0)


def test_column_means_by_hand():
    p = [[0.8, 0.2], [0.6, 0.4], [0.3, 0.7]]
    conf = build_confusion(p, [0, 0, 1])
    npt.assert_allclose(conf.matrix, [[0.7, 0.3], [0.3, 0.7]])
    npt.assert_array_equal(conf.counts, [2, 1])


def test_constant_classifier_is_singular():
    with pytest.raises(SingularConfusionError):
        build_confusion([[0.5, 0.5]] * 4, [0, 1, 0, 1])


def test_missing_class():
    with pytest.raises(InsufficientHoldoutError):
        build_confusion([[0.9, 0.1, 0.0]] * 2, [0, 1], k=3)


def test_identity_estimate_passthrough():
    conf = confusion_from_matrix(np.eye(2))
    npt.assert_allclose(estimate_marginal(conf, [0.3, 0.7]), [0.3, 0.7])


def test_column_maps_to_basis_vector():
    c = np.array([[0.7, 0.2, 0.1], [0.2, 0.6, 0.3], [0.1, 0.2, 0.6]])
    conf = confusion_from_matrix(c)
    for j in range(3):
        npt.assert_allclose(estimate_marginal(conf, c[:, j]), np.eye(3)[j], atol=1e-12)
        npt.assert_allclose(batch_estimate(conf, np.tile(c[:, j], (10, 1))), np.eye(3)[j], atol=1e-12)


def test_two_by_two_inverse_by_hand():
    conf = confusion_from_matrix([[0.9, 0.2], [0.1, 0.8]])
    npt.assert_allclose(estimate_marginal(conf, [0.55, 0.45]), [0.5, 0.5])


def test_batch_linearity():
    conf = confusion_from_matrix([[0.9, 0.2], [0.1, 0.8]])
    u, v = np.array([0.6, 0.4]), np.array([0.1, 0.9])
    npt.assert_allclose(batch_estimate(conf, [u]), estimate_marginal(conf, u))
    npt.assert_allclose(batch_estimate(conf, [u, v]), conf.inverse @ (u + v) / 2)


def test_empty_batch():
    conf = confusion_from_matrix(np.eye(2))
    with pytest.raises(InvalidInputError):
        batch_estimate(conf, np.zeros((0, 2)))


def test_estimates_on_benchmark_sum_to_one_and_are_bounded(bench0):
    conf = build_confusion(*bench0.holdout_stream().arrays())
    p = np.concatenate(bench0.target_stream().pools)
    s = p @ conf.inverse.T
    npt.assert_allclose(s.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(np.linalg.norm(s, axis=1) <= 1 / conf.sigma_min + 1e-9)
    assert np.all((conf.matrix >= 0) & (conf.matrix <= 1))
    npt.assert_allclose(conf.matrix.sum(axis=0), 1.0, atol=1e-6)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_random_diagonally_dominant(k, seed):
    rng = np.random.default_rng(seed)
    c = rng.dirichlet(np.ones(k), size=k).T + 2 * np.eye(k)
    c /= c.sum(axis=0)
    conf = confusion_from_matrix(c)
    v = rng.dirichlet(np.ones(k))
    npt.assert_allclose(estimate_marginal(conf, v).sum(), 1.0, atol=1e-9)
    npt.assert_allclose(c @ estimate_marginal(conf, v), v, atol=1e-9)
