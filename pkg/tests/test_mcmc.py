import numpy as np
import pytest
from scipy import stats

from conftest import random_masked, sim_design
from vbsvm import kernels
from vbsvm.data import DesignPair
from vbsvm.distributions import make_rng, sample_inverse_gaussian, sample_mvn_canonical
from vbsvm.mcmc import (
    GibbsChain,
    GibbsConfig,
    RunningMoments,
    chain_columns,
    draw_coefficients,
    draw_inv_a,
    draw_sigma2_u,
    effective_sample_size,
    gibbs_basic,
    gibbs_missing,
    gibbs_mixed,
    gibbs_sparse,
    posterior_summary,
    write_chain,
)
from vbsvm.priors import PriorConfig
from vbsvm.special import expit, logit

SHORT = GibbsConfig(200, 300, 1, 5, store_a=True)


def test_config_validation():
    with pytest.raises(ValueError):
        GibbsConfig(n_keep=0)
    with pytest.raises(ValueError):
        GibbsConfig(thin=0)
    with pytest.raises(ValueError):
        GibbsConfig(n_burn=-1)


def test_thinning_keeps_requested_draws():
    ds, des = sim_design(30, 2, 0)
    ch = gibbs_mixed(des, ds.y, cfg=GibbsConfig(10, 25, 3, 1))
    assert ch.n_keep == 25


@pytest.mark.parametrize("sampler", ["mixed", "sparse", "missing", "basic"])
def test_chains_reproducible(sampler):
    ds, des = sim_design(40, 3, 1)
    run = {
        "mixed": lambda: gibbs_mixed(des, ds.y, cfg=SHORT),
        "sparse": lambda: gibbs_sparse(des, ds.y, 0.3, cfg=SHORT),
        "missing": lambda: gibbs_missing(random_masked(40, 3, 0.2, 1), cfg=SHORT),
        "basic": lambda: gibbs_basic(des.C, ds.y, 1.0, SHORT),
    }[sampler]
    a, b = run(), run()
    for k in a.draws:
        assert np.array_equal(a.draws[k], b.draws[k])


def test_draw_support():
    ds, des = sim_design(40, 3, 2)
    sp = gibbs_sparse(des, ds.y, 0.3, cfg=SHORT)
    assert np.all(sp.draws["a"] > 0)
    assert set(np.unique(sp.draws["gamma"]).tolist()) <= {0.0, 1.0}
    mi = gibbs_missing(random_masked(40, 3, 0.2, 2), cfg=SHORT)
    assert np.all(mi.draws["a"] > 0)
    assert all(np.all(np.linalg.eigvalsh(S) > 0) for S in mi.draws["Sigma"])


def test_sigma2_conditional_distribution():
    x = np.array([draw_sigma2_u(1.5, 0.5, 2.0, 4, make_rng(s)) for s in range(4000)])
    assert stats.kstest(x, stats.invgamma(3.5, scale=1.5).cdf).pvalue > 1e-3


def test_inv_a_conditional_distribution():
    resid = np.full(20000, 0.7)
    inv_a = draw_inv_a(resid, make_rng(3))
    # a ~ GIG(1/2, 1, resid^2)
    ref = stats.geninvgauss(0.5, 0.7, scale=0.7)
    assert stats.kstest(1 / inv_a, ref.cdf).pvalue > 1e-3


def test_coefficient_conditional_moments():
    rng = np.random.default_rng(0)
    C = rng.standard_normal((10, 3))
    w = rng.uniform(0.5, 2, 10)
    t = rng.standard_normal(10)
    g = make_rng(1)
    draws = np.array([draw_coefficients(C, w, t, 1, 4.0, 0.5, g) for _ in range(20000)])
    prec = (C.T * w) @ C + np.diag([0.25, 2.0, 2.0])
    cov = np.linalg.inv(prec)
    np.testing.assert_allclose(draws.mean(axis=0), cov @ C.T @ t, atol=4 * np.sqrt(np.diag(cov).max() / 20000) * 1.5)
    np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.03)


def test_sparse_full_mask_equals_mixed_conditional_with_b_ridge():
    rng = np.random.default_rng(2)
    C = rng.standard_normal((12, 4))
    w = rng.uniform(0.5, 2, 12)
    t = rng.standard_normal(12)
    b = rng.uniform(0.5, 3, 3)
    s2 = 0.7
    got = draw_coefficients(C * np.ones(4), w, t, 1, 9.0, s2, make_rng(4), b / s2)
    prec = C.T @ np.diag(w) @ C + np.diag(np.r_[1 / 9.0, b / s2])
    ref, _ = sample_mvn_canonical(C.T @ t, prec, make_rng(4))
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_zero_column_gamma_probability_is_rho():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((15, 3))
    Z[:, 1] = 0
    y = np.where(rng.random(15) > 0.5, 1.0, -1.0)
    inv_a = rng.uniform(0.5, 2, 15)
    gamma = np.ones(3)
    prob = kernels.sparse_gibbs_gamma_scan(Z, y, inv_a, np.zeros(15), rng.standard_normal(3), gamma, rng.random(3), float(logit(0.2)))
    assert prob[1] == pytest.approx(0.2, abs=1e-15)


def test_gamma_probability_matches_brute_force_ratio():
    # P(gamma_k = 1 | rest) from the ratio of the two augmented likelihoods
    rng = np.random.default_rng(1)
    n, m = 10, 3
    Z = rng.standard_normal((n, m))
    y = np.where(rng.random(n) > 0.5, 1.0, -1.0)
    inv_a = rng.uniform(0.5, 2, n)
    base = rng.standard_normal(n)
    v = rng.standard_normal(m)
    gamma = np.array([1.0, 0.0, 1.0])
    rho = 0.3

    def loglik(g):
        eta = base + Z @ (g * v)
        a = 1 / inv_a
        return -np.sum((1 + a - y * eta) ** 2 / (2 * a))

    g1, g0 = gamma.copy(), gamma.copy()
    g1[0], g0[0] = 1, 0
    ref = expit(logit(rho) + loglik(g1) - loglik(g0))
    prob = kernels.sparse_gibbs_gamma_scan(Z, y, inv_a, base, v, gamma.copy(), np.ones(m), float(logit(rho)))
    assert prob[0] == pytest.approx(ref, rel=1e-12)


def test_b_conditional_unit_case():
    # v_k = sigma_u gives Inverse-Gaussian(1, 1), mean 1 and variance 1
    x = sample_inverse_gaussian(np.full(20000, 1.0), 1.0, make_rng(7))
    assert abs(x.mean() - 1) < 4 * np.sqrt(1 / 20000)


def _row_oracle(d_row, mis, obs, prec, mu, u, w, y, beta):
    lam = prec + w * np.outer(u, u)
    lin = prec @ mu + u * (y * (1 + w) - w * beta)
    lin_m = lin[mis] - lam[np.ix_(mis, obs)] @ d_row[obs]
    cov = np.linalg.inv(lam[np.ix_(mis, mis)])
    return cov @ lin_m, lam[np.ix_(mis, mis)]


def _gibbs_rows_setup(seed, u_zero):
    rng = np.random.default_rng(seed)
    n, d = 6, 4
    D = rng.standard_normal((n, d))
    mask = np.ones((n, d), dtype=np.int8)
    mask[0, 1] = 0
    mask[1, [0, 3]] = 0
    mask[2, :] = 0
    mask[4, 2] = 0
    A = rng.standard_normal((d, d))
    prec = A @ A.T + d * np.eye(d)
    mu = rng.standard_normal(d)
    u = np.zeros(d) if u_zero else rng.standard_normal(d)
    y = np.where(rng.random(n) > 0.5, 1.0, -1.0)
    inv_a = rng.uniform(0.5, 2, n)
    return D, mask, prec, mu, u, y, inv_a, 0.4


@pytest.mark.parametrize("u_zero", [True, False])
def test_missing_row_conditionals(u_zero):
    D, mask, prec, mu, u, y, inv_a, beta = _gibbs_rows_setup(0, u_zero)
    rows = np.flatnonzero(~mask.all(axis=1)).astype(np.int64)
    counts = (mask == 0).sum(axis=1)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    normals = np.random.default_rng(1).standard_normal(int(counts.sum()))
    Dz = D.copy()
    kernels.missing_gibbs_rows(Dz, mask, rows, offsets, np.zeros_like(normals), y, inv_a, prec, mu, u, beta)
    Dn = D.copy()
    kernels.missing_gibbs_rows(Dn, mask, rows, offsets, normals, y, inv_a, prec, mu, u, beta)
    for i in rows:
        mis, obs = np.flatnonzero(mask[i] == 0), np.flatnonzero(mask[i] == 1)
        mean, lam = _row_oracle(D[i], mis, obs, prec, mu, u, inv_a[i], y[i], beta)
        np.testing.assert_allclose(Dz[i, mis], mean, atol=1e-10)
        if u_zero:
            cond = mu[mis]
            if obs.size:
                cov = np.linalg.inv(prec)
                cond = cond + cov[np.ix_(mis, obs)] @ np.linalg.solve(cov[np.ix_(obs, obs)], D[i, obs] - mu[obs])
            np.testing.assert_allclose(Dz[i, mis], cond, atol=1e-10)
        # the noise term is a square root of the conditional covariance
        z = normals[offsets[i] : offsets[i] + mis.size]
        dev = Dn[i, mis] - mean
        assert dev @ lam @ dev == pytest.approx(z @ z, rel=1e-10)
        np.testing.assert_array_equal(Dn[i, obs], D[i, obs])
    if u_zero:
        # fully missing row: Q_i = 0 and the label term vanishes with u
        np.testing.assert_allclose(Dz[2], mu, atol=1e-12)


def test_missing_sampler_conjugate_moments_without_missing():
    ds, _ = sim_design(200, 2, 3)
    prior = PriorConfig()
    ch = gibbs_missing(ds, prior, GibbsConfig(200, 3000, 1, 2))
    n, d = ds.D.shape
    np.testing.assert_allclose(ch.draws["mu"].mean(axis=0), ds.D.mean(axis=0), atol=0.03)
    S = (ds.D - ds.D.mean(axis=0)).T @ (ds.D - ds.D.mean(axis=0))
    nu = prior.nu_for(d)
    # E[Sigma | D] with mu integrated out is (Psi + S)/(nu + n - 1 - d - 1) for the flat-mean limit
    expected = (0.01 * np.eye(d) + S) / (nu + n - 1 - d - 1)
    np.testing.assert_allclose(ch.draws["Sigma"].mean(axis=0), expected, atol=0.02)
    assert ch.draws["D_mis"].shape == (3000, 0)


def test_posterior_summary_examples():
    chain = GibbsChain("mixed", {"x": np.array([1.0, 2.0, 3.0, 4.0]), "c": np.full((5, 2), 3.0)}, GibbsConfig(), 1, 1)
    s = posterior_summary(chain)
    assert s["x"]["mean"] == 2.5
    assert np.all(s["c"]["sd"] == 0) and np.all(s["c"]["lower"] == s["c"]["upper"])
    with pytest.raises(ValueError):
        posterior_summary(GibbsChain("mixed", {"x": np.ones(1)}, GibbsConfig(), 1, 1))


def test_posterior_summary_matches_streaming_moments():
    ds, des = sim_design(40, 3, 4)
    ch = gibbs_mixed(des, ds.y, cfg=GibbsConfig(100, 500, 1, 3))
    s = posterior_summary(ch)
    for name in ("beta_u", "sigma2_u"):
        rm = RunningMoments()
        for x in ch.draws[name]:
            rm.update(x)
        np.testing.assert_allclose(s[name]["mean"], rm.mean, rtol=1e-12)
        np.testing.assert_allclose(s[name]["sd"], np.sqrt(rm.variance), rtol=1e-12)
        np.testing.assert_allclose(ch.running[name].mean, rm.mean, rtol=1e-12)


def test_effective_sample_size():
    rng = np.random.default_rng(0)
    iid = rng.standard_normal(20000)
    assert 0.9 * 20000 < effective_sample_size(iid) < 1.1 * 20000
    phi = 0.8
    x = np.empty(50000)
    x[0] = 0
    for t in range(1, x.size):
        x[t] = phi * x[t - 1] + rng.standard_normal()
    target = x.size * (1 - phi) / (1 + phi)
    assert 0.8 * target < effective_sample_size(x) < 1.2 * target
    assert effective_sample_size(np.ones(10)) == 10


def test_chain_export(tmp_path):
    ds, des = sim_design(30, 2, 5)
    ch = gibbs_mixed(des, ds.y, cfg=GibbsConfig(10, 20, 1, 1))
    names, mat = chain_columns(ch)
    assert names == ["beta_u[0]", "beta_u[1]", "beta_u[2]", "sigma2_u"]
    path = tmp_path / "chain.txt"
    write_chain(ch, path)
    lines = path.read_text().splitlines()
    assert lines[0].split() == names and len(lines) == 21
    np.testing.assert_array_equal(np.loadtxt(path, skiprows=1), mat)


def test_sparse_sampler_requires_rho():
    ds, des = sim_design(20, 2, 0)
    with pytest.raises(ValueError):
        gibbs_sparse(des, ds.y, cfg=SHORT)
    with pytest.raises(ValueError):
        gibbs_sparse(DesignPair(np.ones((20, 1)), np.zeros((20, 0))), ds.y, 0.5, cfg=SHORT)
