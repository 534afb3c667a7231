"""Gibbs samplers for the mixed, sparse and missing-predictor SVM models.

Every sampler runs a systematic scan in a fixed block order and keeps
``n_keep`` draws after ``n_burn`` burn-in scans (every ``thin``-th scan).
The auxiliary a_i are drawn through 1/a_i ~ Inverse-Gaussian(chi^{-1/2}, 1),
the reciprocal form of GIG(1/2, 1, chi).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .distributions import (
    CHI_FLOOR,
    IG_MEAN_CAP,
    make_rng,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_inverse_wishart,
    sample_mvn_canonical,
)
from .errors import DataError
from .priors import PriorConfig
from .special import logit


@dataclass(frozen=True)
class GibbsConfig:
    n_burn: int = 5000
    n_keep: int = 5000
    thin: int = 1
    seed: int | None = None
    store_a: bool = False

    def __post_init__(self):
        if int(self.n_burn) < 0:
            raise ValueError("n_burn must be nonnegative")
        if int(self.n_keep) < 1:
            raise ValueError("n_keep must be at least 1")
        if int(self.thin) < 1:
            raise ValueError("thin must be at least 1")


class RunningMoments:
    """Welford mean and variance of a stream of equally shaped arrays."""

    def __init__(self):
        self.count = 0
        self.mean = None
        self._m2 = None

    def update(self, x):
        x = np.asarray(x, dtype=float)
        self.count += 1
        if self.mean is None:
            self.mean = x.copy()
            self._m2 = np.zeros_like(x)
            return
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self._m2 = self._m2 + delta * (x - self.mean)

    @property
    def variance(self):
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return self._m2 / (self.count - 1)


@dataclass
class GibbsChain:
    """Retained draws keyed by block name, each of shape (n_keep, ...)."""

    variant: str
    draws: dict
    config: GibbsConfig
    p: int
    m: int
    running: dict = field(default_factory=dict)

    @property
    def n_keep(self):
        return next(iter(self.draws.values())).shape[0]

    def coefficient_draws(self):
        """Draws of the effective linear coefficients used for prediction."""
        if self.variant == "sparse":
            gt = np.concatenate([np.ones((self.n_keep, self.p)), self.draws["gamma"]], axis=1)
            return self.draws["beta_v"] * gt
        if self.variant == "basic":
            return self.draws["beta"]
        return self.draws["beta_u"]

    def coefficient_mean(self):
        return self.coefficient_draws().mean(axis=0)


class _Recorder:
    def __init__(self, cfg, shapes):
        self.cfg = cfg
        self.draws = {k: np.empty((cfg.n_keep,) + tuple(s)) for k, s in shapes.items()}
        self.running = {k: RunningMoments() for k in shapes}
        self.kept = 0

    def scans(self):
        cfg = self.cfg
        total = cfg.n_burn + cfg.n_keep * cfg.thin
        for t in range(total):
            keep = t >= cfg.n_burn and (t - cfg.n_burn) % cfg.thin == cfg.thin - 1
            yield keep

    def record(self, **values):
        for k, v in values.items():
            if k in self.draws:
                self.draws[k][self.kept] = v
                self.running[k].update(v)
        self.kept += 1


def draw_coefficients(C, weights, target, p, sigma2_beta, sigma2_u, rng, ridge_u=None):
    """theta ~ N(P^{-1} C^T target, P^{-1}), P = C^T diag(weights) C + blockdiag(I_p / sigma2_beta, R).

    R is ``ridge_u`` (a vector) if given, else I / sigma2_u. The SVM
    conditional uses weights = 1/a and target = (1 + 1/a) * y.
    """
    m = C.shape[1] - p
    ridge = np.concatenate([np.full(p, 1.0 / sigma2_beta), np.full(m, 1.0 / sigma2_u) if ridge_u is None else ridge_u])
    prec = (C.T * weights) @ C + np.diag(ridge)
    draw, _ = sample_mvn_canonical(C.T @ target, prec, rng, name="coefficient conditional precision")
    return draw


def draw_sigma2_u(a_u, b_u, sq_norm, m, rng):
    """sigma_u^2 ~ IG(A_u + m/2, B_u + sq_norm / 2)."""
    return sample_inverse_gamma(a_u + 0.5 * m, b_u + 0.5 * sq_norm, rng)


def draw_inv_a(margin_resid, rng):
    """1/a_i for a_i ~ GIG(1/2, 1, resid_i^2), resid_i = 1 - y_i eta_i."""
    chi = np.maximum(margin_resid**2, CHI_FLOOR)
    return sample_inverse_gaussian(chi**-0.5, 1.0, rng)


def gibbs_basic(X, y, alpha, cfg=None):
    """Fixed penalty: beta ~ N(0, I / (4 alpha)). Scan order: beta, a."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    cfg = cfg or GibbsConfig()
    rng = make_rng(cfg.seed)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    shapes = {"beta": (k,)}
    if cfg.store_a:
        shapes["a"] = (n,)
    rec = _Recorder(cfg, shapes)
    inv_a = np.ones(n)
    for keep in rec.scans():
        beta = draw_coefficients(X, inv_a, (1.0 + inv_a) * y, 0, 1.0, 0.25 / alpha, rng)
        inv_a = draw_inv_a(1.0 - y * (X @ beta), rng)
        if keep:
            rec.record(beta=beta, a=1.0 / inv_a)
    return GibbsChain("basic", rec.draws, cfg, 0, k, rec.running)


def gibbs_mixed(design, y, prior=None, cfg=None):
    """Scan order: (beta, u), sigma_u^2, a."""
    prior = prior or PriorConfig()
    cfg = cfg or GibbsConfig()
    rng = make_rng(cfg.seed)
    y = np.asarray(y, dtype=float)
    C = design.C
    n, k = C.shape
    p, m = design.p, design.m
    shapes = {"beta_u": (k,), "sigma2_u": ()}
    if cfg.store_a:
        shapes["a"] = (n,)
    rec = _Recorder(cfg, shapes)

    inv_a = np.ones(n)
    sigma2_u = prior.b_u / prior.a_u
    for keep in rec.scans():
        theta = draw_coefficients(C, inv_a, (1.0 + inv_a) * y, p, prior.sigma2_beta, sigma2_u, rng)
        u = theta[p:]
        sigma2_u = draw_sigma2_u(prior.a_u, prior.b_u, u @ u, m, rng)
        inv_a = draw_inv_a(1.0 - y * (C @ theta), rng)
        if keep:
            rec.record(beta_u=theta, sigma2_u=sigma2_u, a=1.0 / inv_a)
    return GibbsChain("mixed", rec.draws, cfg, p, m, rec.running)


def gibbs_sparse(design, y, rho=None, prior=None, cfg=None, backend=None):
    """Scan order: (beta, v), sigma_u^2, a, b_1..b_m, gamma_1..gamma_m."""
    kern = backend or kernels
    prior = prior or PriorConfig()
    cfg = cfg or GibbsConfig()
    rho = prior.rho if rho is None else rho
    if rho is None or not 0.0 < rho < 1.0:
        raise ValueError("the sparse sampler needs rho in (0, 1)")
    rng = make_rng(cfg.seed)
    y = np.asarray(y, dtype=float)
    C = design.C
    X, Z = design.X, np.ascontiguousarray(design.Z, dtype=float)
    n, k = C.shape
    p, m = design.p, design.m
    if m < 1:
        raise ValueError("the sparse sampler needs at least one penalized column")
    shapes = {"beta_v": (k,), "gamma": (m,), "b": (m,), "sigma2_u": ()}
    if cfg.store_a:
        shapes["a"] = (n,)
    rec = _Recorder(cfg, shapes)
    lr = float(logit(rho))

    inv_a = np.ones(n)
    sigma2_u = prior.b_u / prior.a_u
    b = np.ones(m)
    gamma = np.ones(m)
    for keep in rec.scans():
        gt = np.concatenate([np.ones(p), gamma])
        Cg = C * gt
        theta = draw_coefficients(Cg, inv_a, (1.0 + inv_a) * y, p, prior.sigma2_beta, sigma2_u, rng, b / sigma2_u)
        beta, v = theta[:p], theta[p:]
        sigma2_u = draw_sigma2_u(prior.a_u, prior.b_u, v @ (b * v), m, rng)
        inv_a = draw_inv_a(1.0 - y * (Cg @ theta), rng)
        b = sample_inverse_gaussian(np.minimum(np.sqrt(sigma2_u) / np.maximum(np.abs(v), 1e-300), IG_MEAN_CAP), 1.0, rng)
        b = np.atleast_1d(b)
        uniforms = rng.random(m)
        kern.sparse_gibbs_gamma_scan(Z, y, inv_a, X @ beta, v.copy(), gamma, uniforms, lr)
        if keep:
            rec.record(beta_v=theta, gamma=gamma, b=b, sigma2_u=sigma2_u, a=1.0 / inv_a)
    return GibbsChain("sparse", rec.draws, cfg, p, m, rec.running)


def gibbs_missing(ds, prior=None, cfg=None, backend=None):
    """Scan order: (beta, u), sigma_u^2, a, mu, Sigma, then the missing cells.

    The inverse-Wishart scale is Psi + sum_i (d_i - mu)(d_i - mu)^T.
    """
    kern = backend or kernels
    prior = prior or PriorConfig()
    cfg = cfg or GibbsConfig()
    rng = make_rng(cfg.seed)
    y = ds.y
    n, d = ds.n, ds.d
    nu = prior.nu_for(d)
    psi = prior.psi_matrix(d)
    mask = np.ascontiguousarray(ds.observed_mask(), dtype=np.int8)
    counts = mask.sum(axis=0)
    if np.any(counts == 0):
        bad = [ds.columns[j] for j in np.flatnonzero(counts == 0)]
        raise DataError(f"column(s) missing in every row: {', '.join(bad)}")
    rows = np.flatnonzero(~mask.all(axis=1)).astype(np.int64)
    n_mis_row = (mask == 0).sum(axis=1)
    offsets = np.concatenate([[0], np.cumsum(n_mis_row)[:-1]]).astype(np.int64)
    n_cells = int(n_mis_row.sum())

    col_mean = np.where(mask == 1, ds.D, 0.0).sum(axis=0) / counts
    D = np.ascontiguousarray(np.where(mask == 1, ds.D, col_mean[None, :]))
    R = D - D.mean(axis=0)
    Sigma = (psi + R.T @ R) / (nu + n)

    shapes = {"beta_u": (d + 1,), "sigma2_u": (), "mu": (d,), "Sigma": (d, d), "D_mis": (n_cells,)}
    if cfg.store_a:
        shapes["a"] = (n,)
    rec = _Recorder(cfg, shapes)
    missing_cells = mask == 0

    inv_a = np.ones(n)
    sigma2_u = prior.b_u / prior.a_u
    ones = np.ones((n, 1))
    for keep in rec.scans():
        C = np.hstack([ones, D])
        theta = draw_coefficients(C, inv_a, (1.0 + inv_a) * y, 1, prior.sigma2_beta, sigma2_u, rng)
        beta, u = theta[0], theta[1:]
        sigma2_u = draw_sigma2_u(prior.a_u, prior.b_u, u @ u, d, rng)
        inv_a = draw_inv_a(1.0 - y * (C @ theta), rng)

        Sigma_inv = np.linalg.inv(Sigma)
        Sigma_inv = 0.5 * (Sigma_inv + Sigma_inv.T)
        mu, _ = sample_mvn_canonical(Sigma_inv @ D.sum(axis=0), n * Sigma_inv + np.eye(d) / prior.sigma2_mu, rng, "mu conditional precision")
        R = D - mu
        Sigma = sample_inverse_wishart(psi + R.T @ R, nu + n, rng)

        if rows.size:
            Sigma_inv = np.linalg.inv(Sigma)
            Sigma_inv = 0.5 * (Sigma_inv + Sigma_inv.T)
            normals = rng.standard_normal(n_cells)
            kern.missing_gibbs_rows(D, mask, rows, offsets, normals, y, inv_a, Sigma_inv, mu, u, float(beta))
        if keep:
            rec.record(beta_u=theta, sigma2_u=sigma2_u, mu=mu, Sigma=Sigma, D_mis=D[missing_cells], a=1.0 / inv_a)
    return GibbsChain("missing", rec.draws, cfg, 1, d, rec.running)


def posterior_summary(chain, level=0.95):
    """Per block: mean, SD (ddof 1) and a central interval from type-7
    (linear interpolation) empirical quantiles."""
    if chain.n_keep < 2:
        raise ValueError("posterior_summary needs at least two retained draws")
    lo, hi = 0.5 * (1.0 - level), 0.5 * (1.0 + level)
    out = {}
    for name, x in chain.draws.items():
        out[name] = {
            "mean": x.mean(axis=0),
            "sd": x.std(axis=0, ddof=1),
            "lower": np.quantile(x, lo, axis=0, method="linear"),
            "upper": np.quantile(x, hi, axis=0, method="linear"),
        }
    return out


def effective_sample_size(x):
    """ESS of a 1-d chain using Geyer's initial positive sequence on FFT
    autocorrelations. A constant chain returns its length."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 4:
        return float(n)
    xc = x - x.mean()
    var = xc @ xc / n
    if var <= 0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n] / (n * var)
    tau = -1.0
    for t in range(0, n - 1, 2):
        pair = acf[t] + acf[t + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1e-12))


def chain_columns(chain):
    """(header, matrix) with one column per scalar parameter, one row per draw."""
    names, cols = [], []
    for block, x in chain.draws.items():
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] == 1 and x.ndim == 1:
            names.append(block)
        else:
            idx = np.ndindex(*x.shape[1:])
            names.extend(f"{block}[{','.join(str(j) for j in ix)}]" for ix in idx)
        cols.append(flat)
    return names, np.hstack(cols)


def write_chain(chain, path):
    """Whitespace-separated text: a header line, then one draw per row."""
    names, mat = chain_columns(chain)
    with open(path, "w") as fh:
        fh.write(" ".join(names) + "\n")
        for row in mat:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")
