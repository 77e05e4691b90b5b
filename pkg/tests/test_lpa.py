import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from labelshift.errors import InvalidInputError, InvalidParameterError
from labelshift.lpa import LowSwitchRegressor, LpaConfig, count_switches
from labelshift.regression import FLHFTL


def wrap(dim=2, sigma_sq=0.01, horizon=200, delta=0.05, lr=None):
    return LowSwitchRegressor(FLHFTL(dim, 1 / dim if lr is None else lr), LpaConfig(delta, sigma_sq, horizon, dim))


def naive_lpa(zs, dim, lr, cfg):
    """Recompute the drift sum from stored estimates every round."""
    inner = FLHFTL(dim, lr)
    prev, b = np.zeros(dim), 1
    ests, outs, restarts = {}, [], []
    thr = 5 * dim * cfg.sigma_sq * math.log(2 * cfg.horizon / cfg.delta)
    for t, z in enumerate(zs, start=1):
        outs.append(prev.copy())
        ests[t] = inner.predict()
        stat = sum(np.sum((prev - ests[j]) ** 2) for j in range(b + 1, t + 1))
        if stat > thr:
            b, prev = t + 1, np.array(z, dtype=float)
            inner.reset()
            restarts.append(t)
        elif (t - b + 1) & (t - b) == 0:
            prev = np.mean(zs[b - 1:t], axis=0)
        inner.update(z)
    return outs, restarts


class TestConfig:

    def test_threshold_natural_log(self):
        cfg = LpaConfig(0.05, 0.1, 1000, 3)
        assert cfg.threshold == pytest.approx(5 * 3 * 0.1 * math.log(40000))

    @pytest.mark.parametrize("kw", [{"delta": 0.0}, {"delta": 1.0}, {"sigma_sq": -1.0}, {"horizon": 0}])
    def test_validation(self, kw):
        with pytest.raises(InvalidParameterError):
            LpaConfig(**kw)

    def test_dim_mismatch(self):
        with pytest.raises(InvalidParameterError):
            LowSwitchRegressor(FLHFTL(2, 0.5), LpaConfig(dim=3))


class TestLowSwitch:

    def test_first_output_zero(self):
        npt.assert_array_equal(wrap().predict(), [0, 0])

    def test_constant_stream_no_restarts(self):
        o = wrap(dim=2, sigma_sq=0.1, horizon=100)
        for _ in range(100):
            o.update([0.3, 0.7])
        assert o.restarts == []
        npt.assert_allclose(o.predict(), [0.3, 0.7])

    def test_single_step_one_restart(self):
        for tc in (20, 50, 100, 150):
            o = wrap()
            for t in range(1, 201):
                o.update([1.0, 0.0] if t <= tc else [0.0, 1.0])
            assert len(o.restarts) == 1
            delay = o.restarts[0] - (tc + 1)
            assert 0 <= delay <= math.ceil(o.threshold / 2.0) + 5

    def test_refresh_rounds_are_powers_of_two(self):
        rng = np.random.default_rng(0)
        o = wrap(sigma_sq=100.0, horizon=300)  # threshold never reached
        for _ in range(300):
            o.update(rng.normal(0.5, 0.1, 2))
        assert o.restarts == []
        assert [e.round for e in o.switch_log] == [1, 2, 4, 8, 16, 32, 64, 128, 256]

    def test_constant_64_switch_count(self):
        o = wrap(sigma_sq=0.1, horizon=64)
        for _ in range(64):
            o.update([0.2, 0.8])
        assert count_switches(o) <= 7

    def test_all_zero_stream(self):
        o = wrap()
        for _ in range(50):
            o.update([0.0, 0.0])
        assert count_switches(o) == 0

    def test_four_segments_switch_bound(self):
        rng = np.random.default_rng(1)
        levels = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        T = 1024
        o = wrap(sigma_sq=0.01, horizon=T)
        for t in range(T):
            o.update(levels[t * 4 // T] + rng.uniform(-0.1, 0.1, 2))
        assert count_switches(o) <= 4 * (math.log2(T) + 2)

    def test_restart_sets_prev_to_observation(self):
        o = wrap()
        for t in range(1, 80):
            z = np.array([1.0, 0.0]) if t <= 40 else np.array([0.1, 0.9])
            o.update(z)
            if o.last_restart:
                npt.assert_array_equal(o.predict(), z)
        assert o.restarts

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            wrap().update([np.inf, 0])

    @settings(max_examples=40)
    @given(st.lists(arrays(float, 2, elements=st.floats(-2, 2)), min_size=1, max_size=60), st.floats(0, 0.05))
    def test_matches_naive_reference(self, zs, sigma_sq):
        cfg = LpaConfig(0.05, sigma_sq, 60, 2)
        o = LowSwitchRegressor(FLHFTL(2, 0.5), cfg)
        outs = []
        for z in zs:
            outs.append(o.predict())
            o.update(z)
        ref_outs, ref_restarts = naive_lpa(zs, 2, 0.5, cfg)
        npt.assert_allclose(outs, ref_outs, atol=1e-9)
        assert o.restarts == ref_restarts

    @settings(max_examples=40)
    @given(st.lists(arrays(float, 3, elements=st.floats(0, 1)), min_size=1, max_size=80))
    def test_output_changes_only_at_logged_switches(self, zs):
        o = LowSwitchRegressor(FLHFTL(3, 1 / 3), LpaConfig(0.05, 0.005, 80, 3))
        changed = []
        prev = o.predict()
        for t, z in enumerate(zs, start=1):
            o.update(z)
            cur = o.predict()
            if not np.array_equal(cur, prev):
                changed.append(t)
            prev = cur
        assert changed == [e.round for e in o.switch_log]
        assert o.drift_stat >= 0
