import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from labelshift.errors import InvalidInputError, InvalidParameterError
from labelshift.metrics import RoundRecord, score_run
from labelshift.shifts import KINDS, corner_anchors, count_flips, make_schedule, marginal_at
from labelshift.simplex import is_simplex


class TestSchedules:

    def test_mon_midpoint(self):
        assert make_schedule("mon", 10).alpha[4] == pytest.approx(0.5)

    def test_sin_period_four(self):
        s = make_schedule("sin", 8, period=4)
        # rounds 4, 1, 2, 3 have t mod 4 = 0, 1, 2, 3
        npt.assert_allclose(s.alpha[[3, 0, 1, 2]], [0, math.sqrt(2) / 2, 1, math.sqrt(2) / 2], atol=1e-12)

    def test_ber_p_one_alternates(self):
        npt.assert_array_equal(make_schedule("ber", 6, flip_prob=1.0).alpha, [0, 1, 0, 1, 0, 1])

    def test_default_sin_period(self):
        assert make_schedule("sin", 1000).params["period"] == 31

    @pytest.mark.parametrize("kw", [{"kind": "zig"}, {"T": 0}, {"period": 0}, {"flip_prob": 1.5}])
    def test_invalid(self, kw):
        args = {"kind": "squ", "T": 10} | kw
        with pytest.raises(InvalidParameterError):
            make_schedule(args.pop("kind"), args.pop("T"), **args)

    def test_mixture(self):
        s = make_schedule("mon", 4, anchors=([1.0, 0.0], [0.0, 1.0]))
        npt.assert_allclose(marginal_at(s, 1), [0.75, 0.25])
        npt.assert_allclose(marginal_at(s, 4), [0.0, 1.0])
        with pytest.raises(InvalidInputError):
            s.marginal_at(5)

    def test_alpha_zero_and_one_give_anchors(self):
        mu1, mu2 = corner_anchors(3, 0.05)
        s = make_schedule("squ", 6, period=3, anchors=(mu1, mu2))
        npt.assert_allclose(s.marginal_at(1), mu1)
        npt.assert_allclose(s.marginal_at(4), mu2)

    @given(st.sampled_from(KINDS), st.integers(1, 300), st.integers(0, 1000), st.integers(2, 6))
    def test_every_marginal_is_valid(self, kind, T, seed, k):
        rng = np.random.default_rng(seed)
        anchors = rng.dirichlet(np.ones(k), size=2)
        s = make_schedule(kind, T, seed=seed, anchors=anchors, k=k)
        assert np.all((s.alpha >= 0) & (s.alpha <= 1))
        assert all(is_simplex(q) for q in s.marginals)

    @given(st.integers(4, 400), st.integers(1, 20))
    def test_squ_period(self, T, L):
        a = make_schedule("squ", T, period=L).alpha
        npt.assert_array_equal(a[2 * L:], a[:-2 * L] if 2 * L < T else a[:0])

    def test_ber_flip_band(self):
        T = 1000
        flips = [count_flips(make_schedule("ber", T, seed=s)) for s in range(200)]
        assert 0.8 * math.sqrt(T) <= np.mean(flips) <= 1.2 * math.sqrt(T)


def rec(t, q_true, q_hat, pred, lab):
    return RoundRecord(t, np.asarray(q_true, float), np.asarray(q_hat, float), np.asarray(pred), np.asarray(lab))


class TestScoring:

    def test_all_correct(self):
        r = score_run([rec(1, [0.5, 0.5], [0.5, 0.5], [0, 1], [0, 1])])
        assert r.error == 0

    def test_corner_mse(self):
        rs = [rec(t, [0, 1], [1, 0], [0], [1]) for t in range(1, 5)]
        m = score_run(rs)
        assert m.mse == pytest.approx(2.0)
        assert m.error == 1.0

    def test_constant_schedule_vt(self):
        rs = [rec(t, [0.3, 0.7], [0.3, 0.7], [1], [1]) for t in range(1, 4)]
        assert score_run(rs).v_t == 0

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            score_run([])
