import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mdnvar.errors import DomainError
from mdnvar.rng import Rng
from mdnvar.stats_dist import (
    LOG_SQRT_2PI,
    GedShape,
    MixtureParams,
    chi2_sf,
    ged_cdf,
    ged_logpdf,
    ged_quantile,
    ged_sample,
    mixture_cdf,
    mixture_logpdf,
    mixture_sample,
    normal_cdf,
    normal_quantile,
)

# z_{0.01}, frozen from the erfc bisection oracle below
Z_01 = -2.3263478740408408


def _bisect_normal(p):
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestNormal:
    def test_median(self):
        assert normal_quantile(0.5) == 0.0

    def test_one_percent(self):
        assert normal_quantile(0.01) == pytest.approx(Z_01, abs=1e-12)
        assert abs(normal_quantile(0.01) - _bisect_normal(0.01)) <= 1e-9

    def test_symmetry(self):
        assert normal_quantile(0.99) == pytest.approx(-Z_01, abs=1e-12)

    @pytest.mark.parametrize("p", [1e-10, 0.001, 0.2, 0.7, 0.999999])
    def test_matches_erfc_bisection(self, p):
        assert abs(normal_quantile(p) - _bisect_normal(p)) <= 1e-9

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            normal_quantile(p)

    def test_cdf_inverts_quantile(self):
        p = np.linspace(0.001, 0.999, 51)
        np.testing.assert_allclose(normal_cdf([normal_quantile(q) for q in p]), p, atol=1e-14)


class TestGed:
    def test_nu2_is_normal_at_zero(self):
        assert ged_logpdf(0.0, 2.0) == pytest.approx(-LOG_SQRT_2PI, abs=1e-14)

    def test_nu2_logpdf_matches_normal(self):
        x = np.linspace(-5, 5, 41)
        np.testing.assert_allclose(ged_logpdf(x, 2.0), -LOG_SQRT_2PI - 0.5 * x**2, atol=1e-13)

    def test_nu2_quantile(self):
        assert ged_quantile(0.01, 2.0) == pytest.approx(Z_01, abs=1e-8)

    def test_laplace_quantile(self):
        # unit-variance Laplace has scale 1/sqrt(2): q(p) = -b ln(2(1-p)) for p > 1/2
        oracle = -math.log(2 * 0.01) / math.sqrt(2)
        assert oracle == pytest.approx(2.766218, abs=1e-6)
        assert ged_quantile(0.99, 1.0) == pytest.approx(oracle, abs=1e-8)

    @pytest.mark.parametrize("nu", [0.8, 1.0, 1.2, 1.5, 2.0, 3.0, 5.0])
    def test_density_normalized_unit_variance(self, nu):
        pdf = lambda x: math.exp(ged_logpdf(x, nu))
        mass = 2 * integrate.quad(pdf, 0, np.inf)[0]
        var = 2 * integrate.quad(lambda x: x * x * pdf(x), 0, np.inf)[0]
        assert mass == pytest.approx(1.0, abs=1e-9)
        assert var == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("nu", [1.0, 1.3, 2.5])
    def test_cdf_matches_quadrature(self, nu):
        pdf = lambda x: math.exp(ged_logpdf(x, nu))
        for x in (-2.5, -0.4, 0.0, 1.1, 3.0):
            oracle = 0.5 + math.copysign(integrate.quad(pdf, 0, abs(x))[0], x)
            assert ged_cdf(x, nu) == pytest.approx(oracle, abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(1e-6, 1 - 1e-6), st.floats(0.6, 5.0))
    def test_quantile_inverts_cdf(self, p, nu):
        q = ged_quantile(p, nu)
        assert ged_cdf(q, nu) == pytest.approx(p, abs=1e-8)

    @pytest.mark.parametrize("nu", [0.0, -1.0, float("inf"), float("nan")])
    def test_bad_shape(self, nu):
        with pytest.raises(DomainError):
            GedShape(nu)

    @pytest.mark.parametrize("nu", [1.0, 1.5, 2.0, 3.0])
    def test_sample_unit_variance(self, nu):
        x = ged_sample(nu, 1_000_000, Rng(7).child("ged", int(10 * nu)))
        assert np.var(x) == pytest.approx(1.0, abs=0.01)
        assert abs(np.mean(x)) < 0.005

    def test_sample_matches_cdf(self):
        x = ged_sample(1.2, 200_000, Rng(3))
        for q in (-1.5, 0.0, 0.7, 2.2):
            assert np.mean(x <= q) == pytest.approx(ged_cdf(q, 1.2), abs=0.005)


class TestChi2:
    def test_zero(self):
        assert chi2_sf(0.0, 1) == 1.0
        assert chi2_sf(0.0, 2) == 1.0

    def test_dof2_closed_form(self):
        assert chi2_sf(2.0, 2) == pytest.approx(math.exp(-1), abs=1e-15)

    @given(st.floats(0, 700))
    def test_dof2_exact(self, x):
        assert abs(chi2_sf(x, 2) - math.exp(-x / 2)) <= 1e-12

    def test_dof1_critical_value(self):
        density = lambda t: t ** -0.5 * math.exp(-t / 2) / math.sqrt(2 * math.pi)
        oracle = integrate.quad(density, 3.841, np.inf)[0]
        assert chi2_sf(3.841, 1) == pytest.approx(oracle, abs=1e-10)
        assert chi2_sf(3.841, 1) == pytest.approx(0.0500, abs=1e-4)

    @given(st.floats(0, 200), st.floats(0, 50), st.sampled_from([1, 2]))
    def test_monotone(self, x, dx, dof):
        assert chi2_sf(x + dx, dof) <= chi2_sf(x, dof)

    @pytest.mark.parametrize("dof", [0, 3, 10])
    def test_unsupported_dof(self, dof):
        with pytest.raises(DomainError):
            chi2_sf(1.0, dof)

    def test_negative_statistic(self):
        with pytest.raises(DomainError):
            chi2_sf(-0.1, 1)


def _naive_mixture_pdf(y, pi, mu, sigma):
    return sum(p * math.exp(-0.5 * ((y - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))
               for p, m, s in zip(pi, mu, sigma))


mixtures = st.integers(1, 4).flatmap(lambda k: st.tuples(
    st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k),
    st.lists(st.floats(-2.0, 2.0), min_size=k, max_size=k),
    st.lists(st.floats(0.05, 2.0), min_size=k, max_size=k),
))


class TestMixture:
    def test_standard_normal_peak(self):
        assert mixture_logpdf(0.0, MixtureParams([1.0], [0.0], [1.0])) == pytest.approx(-0.918939, abs=1e-6)

    def test_identical_components_collapse(self):
        one = mixture_logpdf(0.37, MixtureParams([1.0], [0.0], [1.0]))
        two = mixture_logpdf(0.37, MixtureParams([0.5, 0.5], [0.0, 0.0], [1.0, 1.0]))
        assert two == pytest.approx(one, abs=1e-15)

    def test_two_component_against_summation(self):
        pi, mu, sigma = [0.3, 0.7], [-1.0, 2.0], [0.5, 1.5]
        oracle = math.log(_naive_mixture_pdf(0.3, pi, mu, sigma))
        assert mixture_logpdf(0.3, MixtureParams(pi, mu, sigma)) == pytest.approx(oracle, abs=1e-13)

    def test_no_underflow_far_in_tail(self):
        params = MixtureParams([0.5, 0.5], [0.0, 0.0], [1e-4, 2e-4])
        v = mixture_logpdf(0.05, params)
        assert math.isfinite(v)
        # dominated by the wider component
        expected = math.log(0.5) - math.log(2e-4) - LOG_SQRT_2PI - 0.5 * (0.05 / 2e-4) ** 2
        assert v == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(mixtures)
    def test_integrates_to_one(self, raw):
        w, mu, sigma = raw
        pi = np.array(w) / np.sum(w)
        params = MixtureParams(pi, mu, sigma)
        lo = min(mu) - 10 * max(sigma)
        hi = max(mu) + 10 * max(sigma)
        f = lambda y: math.exp(mixture_logpdf(y, params))
        pts = sorted(set(mu))
        mass = integrate.quad(f, lo, hi, points=pts, limit=200)[0]
        assert mass == pytest.approx(1.0, abs=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(mixtures, st.floats(-3, 3))
    def test_logpdf_matches_summation(self, raw, y):
        w, mu, sigma = raw
        pi = np.array(w) / np.sum(w)
        oracle = _naive_mixture_pdf(y, pi, mu, sigma)
        assert math.exp(mixture_logpdf(y, MixtureParams(pi, mu, sigma))) == pytest.approx(oracle, rel=1e-10)

    def test_cdf(self):
        params = MixtureParams([0.3, 0.7], [-1.0, 2.0], [0.5, 1.5])
        assert mixture_cdf(-np.inf, params) == 0.0
        assert mixture_cdf(np.inf, params) == 1.0
        f = lambda y: math.exp(mixture_logpdf(y, params))
        assert mixture_cdf(0.4, params) == pytest.approx(integrate.quad(f, -np.inf, 0.4)[0], abs=1e-10)

    @pytest.mark.parametrize("pi,mu,sigma", [
        ([0.5, 0.6], [0, 0], [1, 1]),
        ([1.2, -0.2], [0, 0], [1, 1]),
        ([0.5, 0.5], [0, 0], [1, 0]),
        ([0.5, 0.5], [0, 0], [1, -1]),
        ([0.5, 0.5], [0, 0, 1], [1, 1]),
        ([], [], []),
    ])
    def test_invariants(self, pi, mu, sigma):
        with pytest.raises(DomainError):
            MixtureParams(pi, mu, sigma)

    def test_weight_sum_tolerance(self):
        MixtureParams([0.5, 0.5 + 5e-10], [0, 0], [1, 1])
        with pytest.raises(DomainError):
            MixtureParams([0.5, 0.5 + 5e-9], [0, 0], [1, 1])


class TestMixtureSample:
    def test_single_component(self):
        x = mixture_sample(MixtureParams([1.0], [0.3], [2.0]), 200_000, Rng(1))
        assert np.mean(x) == pytest.approx(0.3, abs=0.02)
        assert np.std(x) == pytest.approx(2.0, rel=0.01)

    def test_component_frequency(self):
        params = MixtureParams([0.3, 0.7], [-1.0, 2.0], [1e-12, 1e-12])
        x = mixture_sample(params, 100_000, Rng(2))
        assert np.mean(np.isclose(x, -1.0)) == pytest.approx(0.3, abs=0.006)
        assert np.all(np.isclose(x, -1.0) | np.isclose(x, 2.0))

    def test_degenerate_width(self):
        params = MixtureParams([0.2, 0.5, 0.3], [-0.01, 0.0, 0.02], [1e-12] * 3)
        x = mixture_sample(params, 1000, Rng(4))
        assert set(np.round(x, 9)) <= {-0.01, 0.0, 0.02}

    def test_cumulative_bracket(self):
        # u in [0, 0.3) picks component 0, [0.3, 1) component 1
        params = MixtureParams([0.3, 0.7], [0.0, 1.0], [1e-12, 1e-12])
        rng = Rng(9)
        u = Rng(9).uniform(size=5000)
        x = mixture_sample(params, 5000, rng)
        np.testing.assert_array_equal(np.round(x), (u >= 0.3).astype(float))

    def test_zero_weight_component_never_drawn(self):
        params = MixtureParams([0.0, 1.0, 0.0], [-5.0, 0.0, 5.0], [1e-12] * 3)
        x = mixture_sample(params, 10_000, Rng(5))
        assert np.all(np.abs(x) < 1e-9)

    def test_deterministic(self):
        params = MixtureParams([0.4, 0.6], [0.0, 0.01], [0.01, 0.02])
        np.testing.assert_array_equal(mixture_sample(params, 1000, Rng(11)),
                                      mixture_sample(params, 1000, Rng(11)))

    def test_bad_count(self):
        with pytest.raises(DomainError):
            mixture_sample(MixtureParams([1.0], [0.0], [1.0]), 0, Rng(0))
