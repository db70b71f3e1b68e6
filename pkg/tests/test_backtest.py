import json
import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdnvar.backtest import (
    BacktestReport,
    IndicatorSeries,
    backtest,
    cc_test,
    independence_test,
    indicator_series,
    pearson_correlation,
    pof_test,
    results_table_csv,
    rolling_volatility,
    run_backtest,
    transition_counts,
)
from mdnvar.errors import AlignmentError, DomainError, InsufficientDataError
from mdnvar.mdn_forecast import ForecastSeries
from mdnvar.rng import Rng

# Kupiec LR evaluated directly from the binomial likelihoods (scipy chi2.sf for p)
LR_11_OF_505 = 5.298249330115567
P_11_OF_505 = 0.021346869154925837
LR_0_OF_505 = 10.150839212036464
P_0_OF_505 = 0.0014423556692298072
# Christoffersen LR for [1,1,1,0*7] from counts (6, 0, 1, 2)
LR_CLUSTER = 5.715626573268905
P_CLUSTER = 0.016814562540452653


def _spread(T, I):
    """Indicator with I isolated breaches spread over T days."""
    x = np.zeros(T, dtype=int)
    x[np.linspace(5, T - 5, I).astype(int)] = 1
    return x


class TestIndicator:
    def test_definition(self):
        np.testing.assert_array_equal(indicator_series([0.01, 0.03], [0.02, 0.02]).values, [0, 1])

    def test_tie_is_not_breach(self):
        assert indicator_series([0.02], [0.02]).values[0] == 0

    def test_huge_forecasts(self):
        assert indicator_series(Rng(0).normal(50), np.full(50, 1e300)).breaches == 0

    def test_length_mismatch(self):
        with pytest.raises(AlignmentError):
            indicator_series([0.1, 0.2], [0.1])

    def test_date_mismatch(self):
        d = [date(2020, 1, 1), date(2020, 1, 2)]
        with pytest.raises(AlignmentError, match="position 1"):
            indicator_series([0.1, 0.2], [0.1, 0.1], d, [d[0], date(2020, 1, 3)])

    def test_values_validated(self):
        with pytest.raises(DomainError):
            IndicatorSeries(None, np.array([0, 2]))

    def test_read_only(self):
        ind = indicator_series([0.1], [0.0])
        with pytest.raises(ValueError):
            ind.values[0] = 0


class TestPof:
    def test_eleven_of_505(self):
        res = pof_test(_spread(505, 11), 0.99)
        assert res.lr == pytest.approx(LR_11_OF_505, rel=1e-12)
        assert res.p_value == pytest.approx(P_11_OF_505, rel=1e-9)
        assert round(res.p_value, 3) == 0.021

    def test_zero_of_505(self):
        res = pof_test(np.zeros(505, dtype=int), 0.99)
        assert res.lr == pytest.approx(LR_0_OF_505, rel=1e-12)
        assert res.p_value == pytest.approx(P_0_OF_505, rel=1e-9)

    def test_exact_coverage(self):
        res = pof_test(_spread(500, 5), 0.99)
        assert res.lr == 0.0 and res.p_value == 1.0

    @given(st.integers(1, 2000), st.data())
    def test_non_negative(self, T, data):
        I = data.draw(st.integers(0, T))
        res = pof_test(np.r_[np.ones(I, int), np.zeros(T - I, int)], 0.99)
        assert res.lr >= 0 and 0 <= res.p_value <= 1

    def test_calibration(self):
        rng = Rng(2024)
        rejections = sum(pof_test((rng.child(i).uniform(size=505) < 0.01).astype(int), 0.99).p_value < 0.05
                         for i in range(2000))
        assert abs(rejections / 2000 - 0.05) <= 0.02

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            pof_test([], 0.99)
        with pytest.raises(DomainError):
            pof_test([0, 1], 1.0)


class TestIndependence:
    def test_all_zero(self):
        res = independence_test(np.zeros(505, dtype=int))
        assert res.lr == 0.0 and res.p_value == 1.0

    def test_equal_transition_probabilities(self):
        res = independence_test([0, 0, 1, 0, 0, 1, 1, 0, 0, 0])
        assert (res.n00, res.n01, res.n10, res.n11) == (4, 2, 2, 1)
        assert res.pi == pytest.approx(1 / 3) and res.pi0 == pytest.approx(1 / 3)
        assert res.pi1 == pytest.approx(1 / 3)
        assert res.lr == 0.0 and res.p_value == 1.0

    def test_clustered(self):
        res = independence_test([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
        assert (res.n00, res.n01, res.n10, res.n11) == (6, 0, 1, 2)
        assert res.lr == pytest.approx(LR_CLUSTER, rel=1e-12)
        assert res.p_value == pytest.approx(P_CLUSTER, rel=1e-9)

    def test_only_last_day_breached(self):
        res = independence_test([0] * 9 + [1])
        assert res.lr == 0.0 and res.p_value == 1.0

    def test_counts_sum(self):
        x = (Rng(3).uniform(size=300) < 0.1).astype(int)
        assert sum(transition_counts(x)) == 299

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            independence_test([1])


class TestConditionalCoverage:
    def test_zero_breach_case(self):
        lr, p = cc_test(LR_0_OF_505, 0.0)
        assert p == pytest.approx(math.exp(-5.075419606018232), rel=1e-12)
        assert round(p, 3) == 0.006

    def test_both_zero(self):
        assert cc_test(0.0, 0.0) == (0.0, 1.0)

    def test_critical_value(self):
        assert cc_test(5.991, 0.0)[1] == pytest.approx(0.0500, abs=5e-5)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            cc_test(-1.0, 0.0)

    @given(st.floats(0, 200), st.floats(0, 200))
    def test_additive(self, a, b):
        lr, p = cc_test(a, b)
        assert lr == a + b
        assert abs(p - math.exp(-(a + b) / 2)) <= 1e-12


class TestRollingVolatility:
    def test_constant(self):
        np.testing.assert_array_equal(rolling_volatility(np.full(20, 0.3)).values, np.zeros(16))

    def test_five(self):
        assert rolling_volatility([1, 2, 3, 4, 5]).values[0] == pytest.approx(math.sqrt(2.5), rel=1e-15)

    def test_two_point(self):
        assert rolling_volatility([0, 0.02], d=2).values[0] == pytest.approx(0.014142, abs=1e-6)

    def test_dates_align_to_window_end(self):
        dates = [date(2020, 1, 1) + timedelta(days=i) for i in range(8)]
        out = rolling_volatility(np.arange(8.0), 5, dates)
        assert out.dates == tuple(dates[4:])

    @given(st.lists(st.floats(-1, 1), min_size=5, max_size=40), st.floats(-100, 100))
    def test_translation_invariant(self, xs, c):
        a = rolling_volatility(xs).values
        b = rolling_volatility(np.asarray(xs) + c).values
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            rolling_volatility([1, 2, 3], d=5)
        with pytest.raises(DomainError):
            rolling_volatility([1, 2, 3], d=1)


class TestPearson:
    def test_extremes(self):
        a = Rng(0).normal(30)
        assert pearson_correlation(a, a) == 1.0
        assert pearson_correlation(a, -a) == -1.0

    def test_hand_example(self):
        assert pearson_correlation([1, 2, 3], [2, 4, 7]) == pytest.approx(0.9934, abs=1e-4)

    def test_constant(self):
        with pytest.raises(DomainError):
            pearson_correlation([1, 1, 1], [1, 2, 3])

    def test_shape(self):
        with pytest.raises(AlignmentError):
            pearson_correlation([1, 2], [1, 2, 3])


class TestReport:
    def test_composition_is_bitwise(self):
        x = _spread(505, 11)
        rep = backtest(IndicatorSeries(None, x), 0.99, "hs")
        pof, dep = pof_test(x, 0.99), independence_test(x)
        assert (rep.lr_pof, rep.p_pof, rep.lr_ind, rep.p_ind) == (pof.lr, pof.p_value, dep.lr, dep.p_value)
        assert (rep.lr_cc, rep.p_cc) == cc_test(pof.lr, dep.lr)
        assert round(rep.p_pof, 3) == 0.021
        assert rep.n11 == 0
        assert rep.p_cc == pytest.approx(math.exp(-(rep.lr_pof + rep.lr_ind) / 2), abs=1e-12)
        assert not rep.pass_pof and rep.pass_ind

    def test_overshoot(self):
        assert backtest(IndicatorSeries(None, np.array([0, 1, 0, 1])), 0.99).overshoot == 0.5

    def test_json_round_trip(self):
        rep = backtest(IndicatorSeries(None, _spread(300, 4)), 0.99, "cmm", 2)
        text = rep.to_json()
        assert BacktestReport.from_dict(json.loads(text)) == rep
        assert text == BacktestReport.from_dict(json.loads(text)).to_json()

    def test_run_backtest(self):
        dates = tuple(date(2020, 1, 1) + timedelta(days=i) for i in range(4))
        losses = np.array([0.01, 0.05, -0.02, 0.03])
        fc = ForecastSeries(dates, np.array([0.02, 0.02, -0.01, 0.04]), "hs", 0.99)
        reports = run_backtest({"hs": fc, "cmm": np.full(4, 0.0)}, losses, 0.99, dates)
        assert reports["hs"].breaches == 1
        assert reports["hs"].negative_var_days == 1
        assert reports["cmm"].breaches == 3
        table = results_table_csv(reports).splitlines()
        assert table[0] == "metric,hs,cmm"
        assert table[1] == "overshoots_pct,25.000,75.000"
        assert [row.split(",")[0] for row in table[2:]] == ["uc_p", "ind_p", "cc_p"]

    def test_run_backtest_misaligned_dates(self):
        dates = tuple(date(2020, 1, 1) + timedelta(days=i) for i in range(3))
        fc = ForecastSeries(tuple(d + timedelta(days=1) for d in dates), np.zeros(3), "hs", 0.99)
        with pytest.raises(AlignmentError):
            run_backtest({"hs": fc}, np.zeros(3), 0.99, dates)
