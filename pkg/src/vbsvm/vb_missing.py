"""VB for the automatic-penalty SVM when some predictor cells are missing
completely at random.

The regression part is the penalty model c_i = [1, d_i], theta = (beta, u),
u ~ N(0, sigma_u^2 I_d). Predictor rows get the imputation model
d_i ~ N(mu, Sigma) with mu ~ N(0, sigma2_mu I) and Sigma ~ IW(Psi, nu). The
missing block of each row has its own Gaussian factor.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import kernels
from ._ascent import coordinate_ascent
from ._linalg import gaussian_from_precision, inverse_from_precision, logdet_spd
from .errors import DataError
from .priors import PriorConfig
from .special import log_bessel_k_half, log_multivariate_gamma
from .vb_basic import LOG_2PI, chi_update


@dataclass(frozen=True)
class MissingPattern:
    """Missing index sets M_i and the rows M that have any."""

    mask: np.ndarray
    rows: np.ndarray

    @property
    def n(self):
        return self.mask.shape[0]

    @property
    def d(self):
        return self.mask.shape[1]

    def missing(self, i):
        return np.flatnonzero(self.mask[i] == 0)

    def observed(self, i):
        return np.flatnonzero(self.mask[i] == 1)

    def _columns(self, idx):
        if idx.size == 0:
            return np.zeros((self.d, 1))
        return np.eye(self.d)[:, idx]

    def P(self, i):
        """d x |M_i| selector of the missing coordinates (0_d if none)."""
        return self._columns(self.missing(i))

    def Q(self, i):
        """d x (d - |M_i|) selector of the observed coordinates (0_d if none)."""
        return self._columns(self.observed(i))


def build_missing_pattern(mask):
    mask = np.asarray(mask)
    if mask.ndim != 2 or not np.all((mask == 0) | (mask == 1)):
        raise ValueError("mask must be a 0/1 matrix")
    mask = np.ascontiguousarray(mask, dtype=np.int8)
    rows = np.flatnonzero(~mask.all(axis=1)).astype(np.int64)
    return MissingPattern(mask, rows)


@dataclass
class VbMissingState:
    mu_bu: np.ndarray
    sigma_bu: np.ndarray
    omega_bu: np.ndarray
    mu_d: np.ndarray
    sigma_d: np.ndarray
    logdet_mis: np.ndarray
    mu_mu: np.ndarray
    sigma_mu_mat: np.ndarray
    psi_q_sigma: np.ndarray
    mu_sigma_inv: np.ndarray
    chi: np.ndarray
    mu_a_inv: np.ndarray
    b_q_sigma_u: float
    mu_inv_sigma_u: float
    pattern: MissingPattern
    prior: PriorConfig
    lb_trace: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self):
        return len(self.lb_trace)

    @property
    def d(self):
        return self.mu_d.shape[1]

    @property
    def mu_beta(self):
        return self.mu_bu[:1]

    @property
    def mu_u(self):
        return self.mu_bu[1:]

    @property
    def mu_c(self):
        """Rows mu_q(c_i) = [1, mu_q(d_i)]."""
        return np.column_stack([np.ones(self.mu_d.shape[0]), self.mu_d])

    def sigma_c(self, i):
        out = np.zeros((self.d + 1, self.d + 1))
        out[1:, 1:] = self.sigma_d[i]
        return out


def _filled_observed(ds):
    D = np.array(ds.D, dtype=float)
    D[np.isnan(D)] = 0.0
    return D


def init_missing_state(ds, prior):
    mask = ds.observed_mask()
    pattern = build_missing_pattern(mask)
    n, d = ds.n, ds.d
    counts = mask.sum(axis=0)
    if np.any(counts == 0):
        bad = [ds.columns[j] for j in np.flatnonzero(counts == 0)]
        raise DataError(f"column(s) missing in every row: {', '.join(bad)}")
    D = np.where(mask == 1, ds.D, 0.0)
    col_mean = D.sum(axis=0) / counts
    mu_d = np.where(mask == 1, ds.D, col_mean[None, :])

    complete = mask.all(axis=1)
    psi = prior.psi_matrix(d)
    if complete.any():
        Dc = ds.D[complete]
        R = Dc - Dc.mean(axis=0)
        mu_sigma_inv, _ = inverse_from_precision(psi + R.T @ R)
        mu_sigma_inv = (prior.nu_for(d) + n) * mu_sigma_inv
    else:
        mu_sigma_inv = np.eye(d)

    return VbMissingState(
        mu_bu=np.zeros(d + 1),
        sigma_bu=np.eye(d + 1),
        omega_bu=np.eye(d + 1),
        mu_d=mu_d,
        sigma_d=np.zeros((n, d, d)),
        logdet_mis=np.zeros(n),
        mu_mu=col_mean.copy(),
        sigma_mu_mat=np.zeros((d, d)),
        psi_q_sigma=psi.copy(),
        mu_sigma_inv=mu_sigma_inv,
        chi=np.ones(n),
        mu_a_inv=np.ones(n),
        b_q_sigma_u=prior.b_u,
        mu_inv_sigma_u=prior.a_u / prior.b_u,
        pattern=pattern,
        prior=prior,
    )


def missing_sweep(state, D_obs, y, backend=None):
    """One pass of the coordinate-ascent updates, in place on ``state``."""
    kern = backend or kernels
    prior, pattern = state.prior, state.pattern
    n, d = state.mu_d.shape
    rows = pattern.rows
    w = state.mu_a_inv

    C = state.mu_c
    ridge = np.concatenate([[1.0 / prior.sigma2_beta], np.full(d, state.mu_inv_sigma_u)])
    prec = (C.T * w) @ C + np.diag(ridge)
    if rows.size:
        prec[1:, 1:] += np.einsum("i,ijk->jk", w[rows], state.sigma_d[rows])
    mu, sigma, _ = gaussian_from_precision(prec, C.T @ ((1.0 + w) * y), name="q(beta,u) precision")
    omega = sigma + np.outer(mu, mu)

    if rows.size:
        kern.missing_vb_rows(
            D_obs,
            pattern.mask,
            rows,
            y,
            w,
            state.mu_sigma_inv,
            state.mu_mu,
            mu[1:],
            np.ascontiguousarray(omega[1:, 1:]),
            np.ascontiguousarray(omega[1:, 0]),
            state.mu_d,
            state.sigma_d,
            state.logdet_mis,
        )
        C = state.mu_c

    chi = chi_update(C, y, mu, sigma)
    if rows.size:
        Sd = state.sigma_d[rows]
        extra = np.einsum("j,ijk,k->i", mu[1:], Sd, mu[1:]) + np.einsum("jk,ikj->i", sigma[1:, 1:], Sd)
        chi[rows] += extra
    w = chi**-0.5

    M = state.mu_sigma_inv
    sigma_mu, _ = inverse_from_precision(np.eye(d) / prior.sigma2_mu + n * M)
    mu_mu = sigma_mu @ (M @ state.mu_d.sum(axis=0))
    R = state.mu_d - mu_mu
    psi_q = prior.psi_matrix(d) + n * sigma_mu + R.T @ R
    if rows.size:
        psi_q = psi_q + Sd.sum(axis=0)
    psi_q = 0.5 * (psi_q + psi_q.T)
    psi_inv, _ = inverse_from_precision(psi_q)

    b_q = prior.b_u + 0.5 * (mu[1:] @ mu[1:] + np.trace(sigma[1:, 1:]))

    state.mu_bu, state.sigma_bu, state.omega_bu = mu, sigma, omega
    state.chi, state.mu_a_inv = chi, w
    state.sigma_mu_mat, state.mu_mu = sigma_mu, mu_mu
    state.psi_q_sigma, state.mu_sigma_inv = psi_q, (prior.nu_for(d) + n) * psi_inv
    state.b_q_sigma_u = b_q
    state.mu_inv_sigma_u = (prior.a_u + 0.5 * d) / b_q


def lower_bound_missing(state, y):
    prior, pattern = state.prior, state.pattern
    y = np.asarray(y, dtype=float)
    n, d = state.mu_d.shape
    nu = prior.nu_for(d)
    mu, sigma, chi = state.mu_bu, state.sigma_bu, state.chi
    a_q = prior.a_u + 0.5 * d
    rows = pattern.rows
    n_mis = (pattern.mask[rows] == 0).sum(axis=1)
    return float(
        n * np.log(2.0)
        - n
        - 0.5 * n * LOG_2PI
        + y @ (state.mu_c @ mu)
        + 0.25 * np.sum(np.log(chi))
        + np.sum(log_bessel_k_half(np.sqrt(chi)))
        + prior.a_u * np.log(prior.b_u)
        - gammaln(prior.a_u)
        - a_q * np.log(state.b_q_sigma_u)
        + gammaln(a_q)
        - 0.5 * np.log(prior.sigma2_beta)
        - (mu[0] ** 2 + sigma[0, 0]) / (2.0 * prior.sigma2_beta)
        + 0.5 * (1 + d)
        + 0.5 * logdet_spd(sigma, "Sigma_q(beta,u)")
        + 0.5 * d
        + 0.5 * logdet_spd(state.sigma_mu_mat, "Sigma_q(mu)")
        - 0.5 * n * d * LOG_2PI
        - 0.5 * d * np.log(prior.sigma2_mu)
        - (state.mu_mu @ state.mu_mu + np.trace(state.sigma_mu_mat)) / (2.0 * prior.sigma2_mu)
        + 0.5 * nu * logdet_spd(prior.psi_matrix(d), "Psi")
        - log_multivariate_gamma(d, 0.5 * nu)
        - 0.5 * (nu + n) * logdet_spd(state.psi_q_sigma, "Psi_q(Sigma)")
        + 0.5 * d * n * np.log(2.0)
        + log_multivariate_gamma(d, 0.5 * (nu + n))
        + np.sum(0.5 * n_mis * (1.0 + LOG_2PI))
        + 0.5 * np.sum(state.logdet_mis[rows])
    )


def fit_vb_missing(ds, prior=None, init=None, backend=None):
    """Fit the missing-predictor model to a LabeledDataset.

    Missing cells start at their observed column means and
    E[Sigma^{-1}] at (nu + n)(Psi + S)^{-1} with S the complete-case scatter
    (identity when no row is complete). ``init`` may be a previous state to
    warm-start from.
    """
    prior = prior or PriorConfig()
    if ds.n < 1:
        raise DataError("need at least one observation")
    prior.nu_for(ds.d)
    state = init_missing_state(ds, prior)
    if init is not None:
        for name in ("mu_d", "sigma_d", "logdet_mis", "mu_mu", "mu_sigma_inv", "mu_a_inv"):
            setattr(state, name, np.array(getattr(init, name), dtype=float))
        state.mu_inv_sigma_u = float(init.mu_inv_sigma_u)
    y = ds.y
    D_obs = _filled_observed(ds)

    state.lb_trace, state.converged = coordinate_ascent(
        lambda: missing_sweep(state, D_obs, y, backend),
        lambda: lower_bound_missing(state, y),
        prior.tol,
        prior.max_iter,
        "fit_vb_missing",
        lambda: np.concatenate([state.mu_bu, state.mu_a_inv]),
        prior.param_tol,
    )
    return state


def impute(state):
    """(filled n x d matrix, per-cell variances); observed cells have variance 0."""
    return state.mu_d.copy(), np.diagonal(state.sigma_d, axis1=1, axis2=2).copy()


def conditional_fill(D, mask, mean, cov):
    """Replace masked cells by E[d_mis | d_obs] under N(mean, cov).

    Only the ratio structure of ``cov`` matters, so any positive multiple of
    the covariance gives the same fill.
    """
    D = np.array(D, dtype=float, ndmin=2)
    mask = np.asarray(mask, dtype=np.int8).reshape(D.shape)
    out = np.where(mask == 1, D, 0.0)
    for i in np.flatnonzero(~mask.all(axis=1)):
        mis = np.flatnonzero(mask[i] == 0)
        obs = np.flatnonzero(mask[i] == 1)
        fill = mean[mis].copy()
        if obs.size:
            fill += cov[np.ix_(mis, obs)] @ np.linalg.solve(cov[np.ix_(obs, obs)], out[i, obs] - mean[obs])
        out[i, mis] = fill
    return out


def predict_missing(state, d_new, mask_new=None):
    """Classify rows of ``d_new``; masked cells are filled by their
    conditional-normal mean under (mu_q(mu), Psi_q(Sigma)), which is
    proportional to E_q[Sigma]."""
    d_new = np.asarray(d_new, dtype=float)
    single = d_new.ndim == 1
    D = np.atleast_2d(d_new)
    mask = np.ones(D.shape, dtype=np.int8) if mask_new is None else np.asarray(mask_new).reshape(D.shape)
    filled = conditional_fill(D, mask, state.mu_mu, state.psi_q_sigma)
    score = state.mu_bu[0] + filled @ state.mu_bu[1:]
    out = np.where(score >= 0, 1, -1)
    return int(out[0]) if single else out
