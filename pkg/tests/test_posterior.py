import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from disagreement_risk.errors import InvalidSigma
from disagreement_risk.posterior import (
    Likelihood,
    log_marginal_density,
    marginal_score,
    posterior_mean,
    posterior_mean_tweedie,
    posterior_second_moment,
    posterior_tail,
)
from disagreement_risk.priors import DiscretePrior, GaussianMixturePrior

from helpers import random_discrete, random_mixture
from test_priors import discrete_priors

RADEMACHER = DiscretePrior.rademacher()
POINT = DiscretePrior.point_mass()
STD_NORMAL = GaussianMixturePrior.normal()


def _mixture_integrals(prior: GaussianMixturePrior, sigma: float, x: float):
    """Brute-force posterior moments by adaptive quadrature over theta."""

    def density(t):
        return sum(w * norm.pdf(t, m, math.sqrt(v)) for m, v, w in zip(prior.means, prior.variances, prior.weights))

    lo = min(prior.means) - 40 * max(prior.variances) ** 0.5
    hi = max(prior.means) + 40 * max(prior.variances) ** 0.5
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400, points=[x])
    f = integrate.quad(lambda t: norm.pdf(x, t, sigma) * density(t), lo, hi, **opts)[0]
    m1 = integrate.quad(lambda t: t * norm.pdf(x, t, sigma) * density(t), lo, hi, **opts)[0]
    m2 = integrate.quad(lambda t: t * t * norm.pdf(x, t, sigma) * density(t), lo, hi, **opts)[0]
    return f, m1 / f, m2 / f


class TestClosedForms:
    def test_log_marginal_density(self):
        # f(0) = (phi(-1) + phi(1)) / 2 = phi(1)
        assert log_marginal_density(RADEMACHER, 1, 0) == pytest.approx(-1.4189385332, abs=1e-9)
        assert log_marginal_density(RADEMACHER, 1, 0) == pytest.approx(norm.logpdf(1.0), abs=1e-14)
        assert log_marginal_density(POINT, 1, 0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
        # N(0,1) * N(0,1) = N(0,2)
        assert log_marginal_density(STD_NORMAL, 1, 2) == pytest.approx(-2.2655121235, abs=1e-9)
        assert log_marginal_density(STD_NORMAL, 1, 2) == pytest.approx(norm.logpdf(2, 0, math.sqrt(2)), abs=1e-14)

    def test_marginal_score(self):
        assert marginal_score(RADEMACHER, 1, 0) == 0.0
        assert marginal_score(RADEMACHER, 1, 1) == pytest.approx(math.tanh(1) - 1, abs=1e-15)
        assert marginal_score(POINT, 2, 3) == pytest.approx(-0.75, abs=1e-15)

    def test_posterior_mean(self):
        for x in (-7.0, 0.0, 2.5):
            assert posterior_mean(POINT, 0.3, x) == 0.0
        assert posterior_mean(STD_NORMAL, 1, 1.6) == pytest.approx(0.8, abs=1e-15)
        assert posterior_mean(RADEMACHER, 1, 0) == 0.0
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(posterior_mean(RADEMACHER, 0.7, x), np.tanh(x / 0.49), atol=1e-15)

    def test_tweedie(self):
        assert posterior_mean_tweedie(POINT, 2, 3) == pytest.approx(0.0, abs=1e-15)
        assert posterior_mean_tweedie(RADEMACHER, 1, 1) == pytest.approx(0.7615941560, abs=1e-10)
        # score vanishes at the symmetry point, so x is a fixed point
        assert posterior_mean_tweedie(RADEMACHER, 1, 0) == 0.0

    def test_posterior_tail(self):
        assert posterior_tail(RADEMACHER, 1, 0, 0.5) == pytest.approx(0.5, abs=1e-15)
        assert posterior_tail(RADEMACHER, 1, 0, 1.5) == 0.0
        assert posterior_tail(STD_NORMAL, 1, 0, 0.0) == pytest.approx(0.5, abs=1e-15)
        # atom equal to s is not counted
        assert posterior_tail(RADEMACHER, 1, 3.0, 1.0) == 0.0

    def test_posterior_second_moment(self):
        for x in (-3.0, 0.0, 12.0):
            assert posterior_second_moment(RADEMACHER, 1, x) == pytest.approx(1.0, abs=1e-15)
        assert posterior_second_moment(POINT, 1, 4.0) == 0.0
        assert posterior_second_moment(STD_NORMAL, 1, 0) == pytest.approx(0.5, abs=1e-15)

    def test_array_in_array_out(self):
        x = np.array([-1.0, 0.0, 1.0])
        assert posterior_mean(RADEMACHER, 1, x).shape == (3,)
        assert isinstance(posterior_mean(RADEMACHER, 1, 0.5), float)

    def test_invalid_sigma(self):
        for bad in (0.0, -1.0, float("nan"), float("inf"), "one"):
            with pytest.raises(InvalidSigma):
                posterior_mean(RADEMACHER, bad, 0.0)
        with pytest.raises(InvalidSigma):
            Likelihood(0.0)


class TestAgainstQuadrature:
    @pytest.mark.parametrize("seed", range(6))
    def test_mixture_functionals(self, seed):
        rng = np.random.default_rng(seed)
        prior = random_mixture(rng, centered=False)
        sigma = float(rng.uniform(0.3, 3.0))
        for x in rng.uniform(-6, 6, size=3):
            f, m1, m2 = _mixture_integrals(prior, sigma, x)
            assert log_marginal_density(prior, sigma, x) == pytest.approx(math.log(f), abs=1e-10)
            assert posterior_mean(prior, sigma, x) == pytest.approx(m1, abs=1e-9)
            assert posterior_second_moment(prior, sigma, x) == pytest.approx(m2, abs=1e-9)

    def test_mixture_tail_against_quadrature(self):
        prior = GaussianMixturePrior([-1.0, 2.0], [0.5, 1.5], [0.4, 0.6])
        sigma, x = 1.3, 0.7
        f, _, _ = _mixture_integrals(prior, sigma, x)

        def density(t):
            return sum(w * norm.pdf(t, m, math.sqrt(v)) for m, v, w in zip(prior.means, prior.variances, prior.weights))

        for s in (-1.0, 0.0, 1.5, 4.0):
            num = integrate.quad(lambda t: norm.pdf(x, t, sigma) * density(t), s, 40, epsabs=0, epsrel=1e-12)[0]
            assert posterior_tail(prior, sigma, x, s) == pytest.approx(num / f, abs=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_score_is_derivative_of_log_density(self, seed):
        rng = np.random.default_rng(100 + seed)
        prior = random_discrete(rng, 6) if seed % 2 else random_mixture(rng)
        sigma = float(rng.uniform(0.5, 2.0))
        x = rng.uniform(-5, 5, size=10)
        h = 1e-5
        fd = (log_marginal_density(prior, sigma, x + h) - log_marginal_density(prior, sigma, x - h)) / (2 * h)
        np.testing.assert_allclose(marginal_score(prior, sigma, x), fd, atol=1e-7, rtol=1e-6)


class TestProperties:
    @settings(max_examples=200)
    @given(discrete_priors(max_atoms=20), st.floats(0.05, 50.0), st.floats(-1.0, 1.0))
    def test_tweedie_equivalence(self, prior, sigma, u):
        x = u * (10 * sigma + 10)
        diff = abs(posterior_mean(prior, sigma, x) - posterior_mean_tweedie(prior, sigma, x))
        assert diff <= 1e-8 * (1 + abs(x))

    @pytest.mark.parametrize("seed", range(5))
    def test_tweedie_equivalence_mixtures(self, seed):
        rng = np.random.default_rng(seed)
        prior = random_mixture(rng, 6, centered=False)
        for sigma in (0.05, 1.0, 50.0):
            x = np.linspace(-(10 * sigma + 10), 10 * sigma + 10, 101)
            diff = np.abs(posterior_mean(prior, sigma, x) - posterior_mean_tweedie(prior, sigma, x))
            assert np.all(diff <= 1e-8 * (1 + np.abs(x)))

    @given(discrete_priors(), st.floats(0.01, 20.0), st.floats(-200, 200))
    def test_range_and_jensen(self, prior, sigma, x):
        pm = posterior_mean(prior, sigma, x)
        lo, hi = prior.atoms[0], prior.atoms[-1]
        slack = 1e-12 * (1 + max(abs(lo), abs(hi)))
        assert lo - slack <= pm <= hi + slack
        assert posterior_second_moment(prior, sigma, x) >= pm**2 - 1e-12 * (1 + pm**2)

    @given(discrete_priors(), st.floats(0.05, 10.0), st.floats(-30, 30))
    def test_tail_in_unit_interval_and_nonincreasing(self, prior, sigma, x):
        s = np.linspace(-25, 25, 51)
        tails = np.array([posterior_tail(prior, sigma, x, si) for si in s])
        assert np.all((tails >= 0) & (tails <= 1))
        assert np.all(np.diff(tails) <= 1e-15)

    @given(discrete_priors(), st.floats(0.05, 10.0))
    def test_posterior_mean_monotone_in_x(self, prior, sigma):
        x = np.linspace(-10 * sigma - 25, 10 * sigma + 25, 2001)
        pm = posterior_mean(prior, sigma, x)
        scale = 1 + max(abs(a) for a in prior.atoms)
        assert np.all(np.diff(pm) >= -1e-12 * scale)

    def test_no_underflow_far_from_support(self):
        # raw densities underflow to 0 here; the log-domain path must not
        p = DiscretePrior([-1.0, 2.0], [0.3, 0.7])
        x, sigma = 400.0, 0.05
        assert math.isfinite(log_marginal_density(p, sigma, x))
        assert posterior_mean(p, sigma, x) == pytest.approx(2.0, abs=1e-12)
        assert posterior_mean_tweedie(p, sigma, x) == pytest.approx(2.0, abs=1e-9)

    def test_small_sigma_limit_nearest_atom(self):
        p = DiscretePrior([-1.0, 0.5, 3.0], [0.2, 0.5, 0.3])
        assert posterior_mean(p, 1e-6, 0.4) == pytest.approx(0.5, abs=1e-12)
        assert posterior_mean(p, 1e-6, 2.9) == pytest.approx(3.0, abs=1e-12)
        # equidistant: weight-proportional average of the two neighbours
        assert posterior_mean(p, 1e-3, -0.25) == pytest.approx((0.2 * -1 + 0.5 * 0.5) / 0.7, abs=1e-9)
