import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import oracles
from vbsvm.distributions import (
    GigParams,
    InverseGammaParams,
    InverseGaussianParams,
    InverseWishartParams,
    gig_logpdf,
    gig_moments,
    inverse_gamma_logpdf,
    inverse_gaussian_logpdf,
    log_bessel_k_half_integer,
    make_rng,
    sample_gig_half,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_inverse_wishart,
    sample_mvn,
    sample_mvn_canonical,
    spawn_rngs,
)
from vbsvm.errors import NumericalError
from vbsvm.special import log_bessel_k_half


@pytest.mark.parametrize("chi", [1e-6, 0.3, 1.0, 7.5, 400.0])
def test_gig_half_moments_against_quadrature(chi):
    q = oracles.gig_half_moments(chi)
    mean, mean_inv = gig_moments(GigParams(0.5, 1.0, chi))
    assert mean == pytest.approx(float(q["mean"]), rel=1e-10)
    assert mean_inv == pytest.approx(float(q["mean_inv"]), rel=1e-10)
    assert mean == pytest.approx(np.sqrt(chi) + 1, rel=1e-13)
    assert mean_inv == pytest.approx(chi**-0.5, rel=1e-13)


@given(st.floats(1e-6, 1e4))
def test_half_integer_series_agrees_with_order_half(x):
    assert log_bessel_k_half_integer(0.5, x) == pytest.approx(log_bessel_k_half(x), rel=1e-13, abs=1e-13)
    assert log_bessel_k_half_integer(-0.5, x) == log_bessel_k_half_integer(0.5, x)


def test_half_integer_rejects_integer_order():
    with pytest.raises(ValueError):
        log_bessel_k_half_integer(1.0, 2.0)


@pytest.mark.parametrize("gamma, psi, chi", [(0.5, 1.0, 2.0), (-1.5, 2.0, 0.7), (2.5, 0.3, 4.0)])
def test_gig_logpdf_matches_scipy(gamma, psi, chi):
    x = np.array([0.05, 0.5, 1.0, 3.0, 11.0])
    ref = stats.geninvgauss(gamma, np.sqrt(psi * chi), scale=np.sqrt(chi / psi)).logpdf(x)
    np.testing.assert_allclose(gig_logpdf(x, GigParams(gamma, psi, chi)), ref, rtol=1e-10)


def test_inverse_gaussian_logpdf_matches_scipy():
    x = np.array([0.1, 0.9, 2.0, 6.0])
    for mu, lam in [(1.0, 1.0), (0.3, 2.0), (5.0, 0.5)]:
        ref = stats.invgauss(mu / lam, scale=lam).logpdf(x)
        np.testing.assert_allclose(inverse_gaussian_logpdf(x, InverseGaussianParams(mu, lam)), ref, rtol=1e-12)


def test_inverse_gamma_logpdf_matches_scipy():
    x = np.array([0.1, 0.9, 2.0, 6.0])
    ref = stats.invgamma(2.5, scale=1.7).logpdf(x)
    np.testing.assert_allclose(inverse_gamma_logpdf(x, InverseGammaParams(2.5, 1.7)), ref, rtol=1e-12)


@pytest.mark.parametrize(
    "cls, args",
    [(GigParams, (0.5, 0.0, 1.0)), (InverseGaussianParams, (-1.0, 1.0)), (InverseGammaParams, (1.0, 0.0))],
)
def test_parameter_validation(cls, args):
    with pytest.raises(ValueError):
        cls(*args)


def test_inverse_wishart_validation():
    with pytest.raises(ValueError):
        InverseWishartParams(np.eye(3), 1.5)
    with pytest.raises(ValueError):
        InverseWishartParams(np.array([[1.0, 0.2], [0.0, 1.0]]), 4.0)


@pytest.mark.parametrize("mu, lam", [(1.0, 1.0), (0.2, 3.0), (4.0, 0.7)])
def test_inverse_gaussian_sampler_ks(mu, lam):
    x = sample_inverse_gaussian(mu, lam, make_rng(1), size=20000)
    assert stats.kstest(x, stats.invgauss(mu / lam, scale=lam).cdf).pvalue > 1e-3


def test_inverse_gaussian_sampler_huge_mean_is_finite():
    x = sample_inverse_gaussian(1e15, 1.0, make_rng(2), size=1000)
    assert np.all(np.isfinite(x)) and np.all(x > 0)


@pytest.mark.parametrize("chi", [0.05, 1.0, 20.0])
def test_gig_half_sampler_ks(chi):
    x = sample_gig_half(chi, make_rng(3), size=20000)
    ref = stats.geninvgauss(0.5, np.sqrt(chi), scale=np.sqrt(chi))
    assert stats.kstest(x, ref.cdf).pvalue > 1e-3


def test_gig_half_sampler_floors_zero_chi():
    x = sample_gig_half(np.zeros(50), make_rng(4))
    assert np.all(np.isfinite(x)) and np.all(x > 0)


def test_inverse_gamma_sampler_ks():
    x = sample_inverse_gamma(3.0, 2.0, make_rng(5), size=20000)
    assert stats.kstest(x, stats.invgamma(3.0, scale=2.0).cdf).pvalue > 1e-3


def test_inverse_wishart_sampler_mean():
    scale = np.array([[2.0, 0.5], [0.5, 1.0]])
    dof = 7.0
    rng = make_rng(6)
    draws = np.array([sample_inverse_wishart(scale, dof, rng) for _ in range(20000)])
    np.testing.assert_allclose(draws.mean(axis=0), scale / (dof - 3), rtol=0.03, atol=0.005)
    assert np.allclose(draws, draws.transpose(0, 2, 1))


def test_inverse_wishart_one_dim_is_inverse_gamma():
    rng = make_rng(7)
    x = np.array([sample_inverse_wishart(np.array([[1.4]]), 5.0, rng)[0, 0] for _ in range(10000)])
    assert stats.kstest(x, stats.invgamma(2.5, scale=0.7).cdf).pvalue > 1e-3


def test_inverse_wishart_rejects_indefinite_scale():
    with pytest.raises(NumericalError):
        sample_inverse_wishart(np.array([[1.0, 2.0], [2.0, 1.0]]), 5.0, make_rng(0))


def test_mvn_samplers_agree_in_moments():
    cov = np.array([[1.0, 0.6, 0.0], [0.6, 2.0, -0.3], [0.0, -0.3, 0.5]])
    mean = np.array([1.0, -2.0, 0.5])
    x = sample_mvn(mean, cov, make_rng(8), size=40000)
    np.testing.assert_allclose(x.mean(axis=0), mean, atol=0.03)
    np.testing.assert_allclose(np.cov(x.T), cov, atol=0.04)
    prec = np.linalg.inv(cov)
    rng = make_rng(9)
    draws = []
    for _ in range(20000):
        d, m = sample_mvn_canonical(prec @ mean, prec, rng)
        draws.append(d)
    np.testing.assert_allclose(m, mean, rtol=1e-12)
    np.testing.assert_allclose(np.cov(np.array(draws).T), cov, atol=0.06)


def test_mvn_zero_dimension():
    assert sample_mvn(np.zeros(0), np.zeros((0, 0)), make_rng(0)).shape == (0,)
    d, m = sample_mvn_canonical(np.zeros(0), np.zeros((0, 0)), make_rng(0))
    assert d.shape == m.shape == (0,)


def test_rng_reproducible_and_streams_independent():
    assert make_rng(5).random() == make_rng(5).random()
    a, b = spawn_rngs(5, 2)
    assert a.random() != b.random()
    first = [g.random() for g in spawn_rngs(5, 3)]
    assert first == [g.random() for g in spawn_rngs(5, 3)]
    g = make_rng(1)
    assert make_rng(g) is g
