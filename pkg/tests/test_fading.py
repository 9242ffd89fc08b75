import math

import numpy as np
import pytest
from scipy import stats

from ehcr import fading
from ehcr.fading import FadingParams
from ehcr.numerics import AccuracySpec, integrate_adaptive

# mpmath references (40 digits) for K=7, mu=1, m=20
PDF_AT_1 = 0.7434319984178851
CDF_AT_1 = 0.5556171037599381  # quadrature of the pdf on [0, 1]
LOG_MOMENT_MU1 = -0.15831501478279391
LOG_MOMENT_MU16 = -0.026742120986334267

DEFAULT_LINK = FadingParams(rician_k=7.0, mu=1, m=20)


class TestConstruction:
    @pytest.mark.parametrize("k", [0.5, 7.0, 15.0])
    @pytest.mark.parametrize("mu", [1, 2, 16])
    @pytest.mark.parametrize("m", [16, 18, 20])
    def test_mixture_identities(self, k, mu, m):
        p = FadingParams(k, mu, m)
        assert p.n_mix == m - mu
        assert math.fsum(p.weights) == pytest.approx(1.0, abs=1e-12)
        mean = math.fsum(w * s * p.omega for w, s in zip(p.weights, p.shapes))
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert all(s >= 1 for s in p.shapes)
        assert all(a > b for a, b in zip(p.shapes, p.shapes[1:]))

    def test_rejects_mu_above_m(self):
        with pytest.raises(ValueError):
            FadingParams(7.0, 16, 5)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            FadingParams(-1.0, 1, 2)
        with pytest.raises(ValueError):
            FadingParams(7.0, 0, 2)
        with pytest.raises(ValueError):
            FadingParams(7.0, 1.5, 2)


class TestPdf:
    def test_zero_at_origin_when_multiple_clusters(self):
        assert fading.pdf(FadingParams(7.0, 2, 20), 0.0) == 0.0

    def test_unit_exponential_special_case(self):
        p = FadingParams(3.3, 1, 1)
        for x in [0.0, 0.2, 1.0, 4.5]:
            assert fading.pdf(p, x) == pytest.approx(math.exp(-x), rel=1e-12)

    def test_reference_value(self):
        assert fading.pdf(DEFAULT_LINK, 1.0) == pytest.approx(PDF_AT_1, rel=1e-12)

    @pytest.mark.parametrize("k", [0.5, 7.0, 15.0])
    @pytest.mark.parametrize("mu,m", [(1, 1), (1, 20), (2, 11), (16, 20)])
    def test_normalization(self, k, mu, m):
        p = FadingParams(k, mu, m)
        mass = integrate_adaptive(lambda x: fading.pdf(p, x), 0.0, 50.0, AccuracySpec())
        assert mass == pytest.approx(1.0, abs=1e-9)

    def test_rejects_negative_argument(self):
        with pytest.raises(ValueError):
            fading.pdf(DEFAULT_LINK, -0.1)


class TestCdf:
    def test_zero_at_origin(self):
        for p in (DEFAULT_LINK, FadingParams(0.5, 2, 7)):
            assert fading.cdf(p, 0.0) == 0.0

    def test_reference_value(self):
        assert fading.cdf(DEFAULT_LINK, 1.0) == pytest.approx(CDF_AT_1, rel=1e-10)

    def test_tail_mass(self):
        assert fading.cdf(DEFAULT_LINK, 50.0) >= 1.0 - 1e-9

    def test_nondecreasing(self):
        xs = np.linspace(0.0, 10.0, 300)
        vals = fading.cdf(DEFAULT_LINK, xs)
        assert np.all(np.diff(vals) >= 0.0)

    def test_derivative_matches_pdf(self):
        # differentiate the survival function: same derivative (up to sign)
        # without the cancellation of cdf values near 1 in the far tail
        h = 1e-6
        for x in np.linspace(0.3, 5.0, 20):
            deriv = (fading.survival(DEFAULT_LINK, x - h) - fading.survival(DEFAULT_LINK, x + h)) / (2 * h)
            assert deriv == pytest.approx(fading.pdf(DEFAULT_LINK, x), rel=1e-6)

    def test_stochastic_ordering_in_mu(self):
        low = fading.cdf(FadingParams(7.0, 1, 20), 0.5)
        high = fading.cdf(FadingParams(7.0, 16, 20), 0.5)
        assert high < low

    def test_rejects_negative_argument(self):
        with pytest.raises(ValueError):
            fading.cdf(DEFAULT_LINK, -1.0)


class TestLogMoment:
    def test_unit_exponential(self):
        assert fading.log_moment(FadingParams(9.9, 1, 1)) == pytest.approx(
            -0.5772156649015329, abs=1e-13
        )

    def test_reference_values(self):
        assert fading.log_moment(DEFAULT_LINK) == pytest.approx(LOG_MOMENT_MU1, rel=1e-12)
        assert fading.log_moment(FadingParams(7.0, 16, 20)) == pytest.approx(
            LOG_MOMENT_MU16, rel=1e-12
        )

    def test_less_fluctuation_brings_log_moment_toward_zero(self):
        assert fading.log_moment(FadingParams(7.0, 16, 20)) > fading.log_moment(DEFAULT_LINK)

    def test_always_negative(self):
        for k in (0.5, 7.0):
            for mu, m in ((1, 1), (2, 5), (16, 20)):
                assert fading.log_moment(FadingParams(k, mu, m)) < 0.0

    def test_monte_carlo_agreement(self):
        gen = np.random.default_rng(42)
        draws = fading.sample(DEFAULT_LINK, gen, size=1_000_000)
        logs = np.log(draws)
        se = logs.std() / math.sqrt(logs.size)
        assert abs(logs.mean() - LOG_MOMENT_MU1) < 3.5 * se


class TestSample:
    def test_deterministic_for_fixed_seed(self):
        a = fading.sample(DEFAULT_LINK, np.random.default_rng(11), size=1000)
        b = fading.sample(DEFAULT_LINK, np.random.default_rng(11), size=1000)
        assert np.array_equal(a, b)

    def test_unit_mean(self):
        gen = np.random.default_rng(5)
        draws = fading.sample(DEFAULT_LINK, gen, size=1_000_000)
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean() - 1.0) < 3.0 * se

    def test_kolmogorov_smirnov(self):
        gen = np.random.default_rng(8)
        draws = fading.sample(DEFAULT_LINK, gen, size=100_000)
        result = stats.kstest(draws, lambda x: fading.cdf(DEFAULT_LINK, x))
        assert result.pvalue > 0.01

    def test_scalar_draw(self):
        value = fading.sample(DEFAULT_LINK, np.random.default_rng(0))
        assert isinstance(value, float) and value > 0.0


class TestSumParams:
    def test_identity_for_single_term(self):
        p = FadingParams(7.0, 1, 20)
        assert fading.sum_params(p, 1) == p

    def test_two_fold_combination(self):
        q = fading.sum_params(FadingParams(7.0, 1, 20), 2)
        assert q.mu == 2
        assert q.m == 20
        assert q.n_mix == 18

    def test_returned_law_stays_unit_mean(self):
        q = fading.sum_params(FadingParams(7.0, 1, 20), 5)
        mean = math.fsum(w * s * q.omega for w, s in zip(q.weights, q.shapes))
        assert mean == pytest.approx(1.0, abs=1e-12)

    def test_domain_error(self):
        p = FadingParams(7.0, 1, 20)
        with pytest.raises(ValueError):
            fading.sum_params(p, 21)
        with pytest.raises(ValueError):
            fading.sum_params(p, 0)
