import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdnvar.classic_var import (
    VaRConfig,
    ceil_order_statistic,
    order_statistic_rank,
    rolling_var,
    var_cmm,
    var_hs,
)
from mdnvar.errors import DomainError, InsufficientDataError

Z_01 = -2.3263478740408408

windows = st.lists(st.floats(-0.2, 0.2), min_size=2, max_size=300)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"alpha": 0.0}, {"alpha": 1.0}, {"horizon": 2}, {"window": 1}, {"asset_value": 0.0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            VaRConfig(**kwargs)


class TestOrderStatistic:
    def test_footnote_example(self):
        assert order_statistic_rank(0.95, 36) == 35

    def test_ceiling(self):
        assert order_statistic_rank(0.99, 250) == 248
        assert order_statistic_rank(0.99, 100) == 99
        assert order_statistic_rank(0.95, 100) == 95

    def test_float_noise_does_not_bump_rank(self):
        # 0.99 * 100_000 is 98999.99999999999 or 99000.00000000001 depending on rounding
        assert order_statistic_rank(0.99, 100_000) == 99_000
        assert order_statistic_rank(0.7, 10) == 7

    def test_value(self):
        losses = np.random.default_rng(0).permutation(np.arange(1, 37)) / 100
        assert ceil_order_statistic(losses, 0.95) == 0.35


class TestHistoricalSimulation:
    def test_grid(self):
        losses = np.arange(1, 101) / 100
        assert var_hs(losses, VaRConfig(alpha=0.95)) == 0.95

    def test_250_window(self):
        losses = np.random.default_rng(1).normal(size=250)
        assert var_hs(losses) == np.sort(losses)[247]

    def test_scales_with_asset_value(self):
        losses = np.random.default_rng(2).normal(size=100)
        assert var_hs(losses, VaRConfig(asset_value=3.0)) == 3.0 * var_hs(losses)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            var_hs([0.1])

    @given(windows, st.randoms(use_true_random=False))
    def test_permutation_invariant(self, w, rnd):
        shuffled = list(w)
        rnd.shuffle(shuffled)
        assert var_hs(w) == var_hs(shuffled)

    @given(windows, st.floats(0.01, 0.98), st.floats(0.0, 0.5))
    def test_monotone_in_alpha(self, w, a, da):
        b = min(a + da, 0.99)
        assert var_hs(w, VaRConfig(alpha=a)) <= var_hs(w, VaRConfig(alpha=b))


class TestConstantMean:
    def test_normal_oracle(self):
        r = np.array([0.01, -0.01])  # mean 0, population std 0.01
        assert var_cmm(r) == pytest.approx(-Z_01 * 0.01, abs=1e-15)
        assert var_cmm(r) == pytest.approx(0.0232635, abs=1e-7)

    def test_zero_volatility_gives_negative_var(self):
        assert var_cmm([0.001] * 10) == pytest.approx(-0.001, abs=1e-18)

    def test_asset_value(self):
        r = np.array([0.01, -0.01])
        assert var_cmm(r, VaRConfig(asset_value=2.0)) == pytest.approx(0.046527, abs=1e-6)

    def test_uses_population_std(self):
        r = np.random.default_rng(3).normal(0.001, 0.02, size=250)
        expected = -(r.mean() + Z_01 * r.std(ddof=0))
        assert var_cmm(r) == pytest.approx(expected, rel=1e-13)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            var_cmm([0.1])

    @given(windows, st.floats(0.01, 0.98), st.floats(0.0, 0.5))
    def test_monotone_in_alpha(self, w, a, da):
        b = min(a + da, 0.99)
        assert var_cmm(w, VaRConfig(alpha=a)) <= var_cmm(w, VaRConfig(alpha=b)) + 1e-15


class TestRolling:
    def test_uses_only_trailing_window(self):
        r = np.random.default_rng(4).normal(0, 0.01, size=300)
        config = VaRConfig(window=250)
        out = rolling_var("hs", r, (260, 300), config)
        for j, t in enumerate(range(260, 300)):
            assert out[j] == var_hs(-r[t - 250:t], config)
        out = rolling_var("cmm", r, (250, 260), config)
        assert out[0] == var_cmm(r[:250], config)

    def test_future_does_not_leak(self):
        r = np.random.default_rng(5).normal(0, 0.01, size=300)
        cut = r.copy()
        cut[280:] = 10.0
        config = VaRConfig(window=250)
        np.testing.assert_array_equal(rolling_var("cmm", r, (250, 280), config),
                                      rolling_var("cmm", cut, (250, 280), config))

    def test_needs_full_window(self):
        with pytest.raises(InsufficientDataError):
            rolling_var("hs", np.zeros(300), (200, 300), VaRConfig(window=250))

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            rolling_var("ewma", np.zeros(300), (250, 300))
