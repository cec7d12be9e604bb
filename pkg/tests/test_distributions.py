import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from parvi.distributions import (
    POSITIVE_REALS,
    REALS,
    Exponential,
    Gamma,
    Interval,
    Lognormal,
    Normal,
    RngState,
)

# log(2^4 / Gamma(4)) + 3 log 2 - 4, evaluated with mpmath at 30 digits
GAMMA_4_2_AT_2 = -0.939729205308437834891852508173


def test_log_pdf_examples():
    assert Exponential(1.0).log_pdf(1.0) == pytest.approx(-1.0, abs=1e-15)
    assert Gamma(4.0, 2.0).log_pdf(2.0) == pytest.approx(GAMMA_4_2_AT_2, abs=1e-13)
    assert Lognormal(0.0, 1.0).log_pdf(-0.5) == -math.inf


@pytest.mark.parametrize("d", [Exponential(1.0), Gamma(2.0, 1.0), Normal(0.0, 1.0), Lognormal(0.0, 1.0)])
@pytest.mark.parametrize("v", [math.nan, math.inf, -math.inf])
def test_log_pdf_rejects_non_finite(d, v):
    with pytest.raises(ValueError):
        d.log_pdf(v)


@pytest.mark.parametrize(
    "ctor",
    [
        lambda: Exponential(0.0),
        lambda: Exponential(-1.0),
        lambda: Gamma(0.0, 1.0),
        lambda: Gamma(1.0, -2.0),
        lambda: Normal(0.0, 0.0),
        lambda: Normal(math.nan, 1.0),
        lambda: Lognormal(0.0, -0.1),
    ],
)
def test_construction_rejects_invalid(ctor):
    with pytest.raises(ValueError):
        ctor()


def test_supports():
    assert Exponential(1).support == Gamma(1, 1).support == Lognormal(0, 1).support == POSITIVE_REALS
    assert Normal(0, 1).support == REALS
    assert POSITIVE_REALS.issubset(REALS) and not REALS.issubset(POSITIVE_REALS)
    assert str(Interval(0.0, math.inf)) == "(0, inf)"


def test_gamma_log_pdf_matches_high_precision(np_rng):
    mpmath.mp.dps = 30
    for _ in range(20):
        a, b, v = np_rng.uniform(0.2, 20), np_rng.uniform(0.1, 10), np_rng.uniform(0.01, 10)
        exact = a * mpmath.log(b) - mpmath.loggamma(a) + (a - 1) * mpmath.log(v) - b * v
        assert Gamma(a, b).log_pdf(v) == pytest.approx(float(exact), abs=1e-12)


def test_log_pdf_vectorized_and_scalar():
    d = Gamma(2.0, 1.0)
    v = np.array([-1.0, 0.0, 0.5, 2.0])
    out = d.log_pdf(v)
    assert out.shape == (4,)
    assert out[0] == out[1] == -np.inf
    assert out[2] == pytest.approx(d.log_pdf(0.5))
    assert isinstance(d.log_pdf(0.5), float)


def test_sample_degenerate_normal():
    draws = Normal(0.0, 1e-12).sample(RngState(1), 3)
    assert np.all(np.abs(draws) < 1e-9)


def test_sample_gamma_mean():
    x = Gamma(4.0, 2.0).sample(RngState(3), 10**5)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 2.0) < 3 * se


def test_sample_lognormal_mean():
    x = Lognormal(0.0, 0.5).sample(RngState(4), 10**5)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - math.exp(0.125)) < 3 * se


def test_means():
    assert Lognormal(0.0, 0.5).mean() == pytest.approx(1.133148453066826, abs=1e-12)
    assert Gamma(4, 2).mean() == 2.0
    assert Exponential(1).mean() == 1.0
    with pytest.raises(ValueError):
        Lognormal(0.0, 0.0)


def test_lognormal_mean_against_monte_carlo():
    x = Lognormal(0.0, 0.5).sample(RngState(5), 10**6)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - Lognormal(0.0, 0.5).mean()) < 4 * se


def test_sample_rejects_bad_count():
    with pytest.raises(ValueError):
        Normal(0, 1).sample(RngState(0), 0)


def test_rng_state_replay_and_independence():
    a = RngState(7, 3).generator().standard_normal(5)
    b = RngState(7, 3).generator().standard_normal(5)
    c = RngState(7, 4).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    with pytest.raises(ValueError):
        RngState(-1)


def _random_dists(rng, n=5):
    for _ in range(n):
        yield Exponential(rng.uniform(0.2, 5))
        yield Gamma(rng.uniform(0.5, 10), rng.uniform(0.2, 5))
        yield Normal(rng.uniform(-3, 3), rng.uniform(0.2, 3))
        yield Lognormal(rng.uniform(-1, 1), rng.uniform(0.2, 1.2))


def test_pdf_integrates_to_one(np_rng):
    for d in _random_dists(np_rng):
        lo = -np.inf if d.support == REALS else 0.0
        # split at the mean so quad resolves the peak
        m = d.mean()
        total = integrate.quad(d.pdf, lo, m, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        total += integrate.quad(d.pdf, m, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        assert total == pytest.approx(1.0, abs=1e-8), d


def _scipy_equivalent(d):
    if isinstance(d, Exponential):
        return stats.expon(scale=1 / d.rate)
    if isinstance(d, Gamma):
        return stats.gamma(d.shape, scale=1 / d.rate)
    if isinstance(d, Normal):
        return stats.norm(d.loc, d.scale)
    return stats.lognorm(d.scale, scale=math.exp(d.loc))


@pytest.mark.parametrize("d", [Exponential(1.5), Gamma(0.5, 2.0), Gamma(4.0, 2.0), Normal(1.0, 2.0), Lognormal(0.0, 0.5)])
def test_empirical_cdf_matches_analytic(d):
    n = 10**5
    draws = np.sort(d.sample(RngState(11), n))
    ref = _scipy_equivalent(d)
    qs = ref.ppf(np.linspace(0.1, 0.9, 9))
    ecdf = np.searchsorted(draws, qs, side="right") / n
    assert np.max(np.abs(ecdf - ref.cdf(qs))) < 1.63 / math.sqrt(n)
    np.testing.assert_allclose(d.cdf(qs), ref.cdf(qs), atol=1e-12)
    assert np.all(d.support.contains(draws))


@settings(max_examples=100, deadline=None)
@given(
    mu=st.floats(-5, 5),
    sigma=st.floats(0.05, 5),
    v=st.floats(1e-6, 1e6),
)
def test_lognormal_is_normal_change_of_variables(mu, sigma, v):
    lhs = Lognormal(mu, sigma).log_pdf(v)
    rhs = Normal(mu, sigma).log_pdf(math.log(v)) - math.log(v)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
