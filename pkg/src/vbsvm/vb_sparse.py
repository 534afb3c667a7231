"""VB for the SVM with a Laplace-zero (spike-and-slab) prior on the penalized
coefficients.

Each penalized coefficient is gamma_k * v_k with gamma_k ~ Bernoulli(rho),
v_k | b_k, sigma_u^2 ~ N(0, sigma_u^2 / b_k) and b_k ~ IG(1, 1/2), so that
v_k is Laplace(0, sigma_u) marginally. The mean-field factors are Gaussian
for (beta, v), inverse Gaussian for b_k, Bernoulli for gamma_k, inverse gamma
for sigma_u^2 and GIG(1/2, 1, chi_i) for a_i.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ndtr, xlogy

from . import kernels
from ._ascent import coordinate_ascent
from ._linalg import gaussian_from_precision, logdet_spd
from .distributions import CHI_FLOOR
from .priors import PriorConfig
from .special import log_bessel_k_half, logit
from .vb_basic import LOG_2PI

log = logging.getLogger(__name__)

ETA_CLIP = 35.0


@dataclass
class VbSparseState:
    mu_bv: np.ndarray
    sigma_bv: np.ndarray
    omega_bv: np.ndarray
    mu_b: np.ndarray
    mu_gamma: np.ndarray
    mu_gamma_tilde: np.ndarray
    omega_gamma_tilde: np.ndarray
    chi: np.ndarray
    mu_a_inv: np.ndarray
    b_q_sigma_u: float
    mu_inv_sigma_u: float
    p: int
    m: int
    rho: float
    prior: PriorConfig
    lb_trace: list = field(default_factory=list)
    converged: bool = False
    n_saturated: int = 0

    @property
    def n_iter(self):
        return len(self.lb_trace)

    @property
    def mu_beta(self):
        return self.mu_bv[: self.p]

    @property
    def mu_v(self):
        return self.mu_bv[self.p :]

    @property
    def coefficients(self):
        """Posterior-mean effective coefficients mu_bv * mu_gamma_tilde."""
        return self.mu_bv * self.mu_gamma_tilde


def gamma_tilde_moments(mu_gamma, p):
    """(mu, Omega) of gamma_tilde = [1_p, gamma] under independent Bernoullis."""
    mu_t = np.concatenate([np.ones(p), mu_gamma])
    omega = np.outer(mu_t, mu_t)
    omega[np.diag_indices_from(omega)] = mu_t
    return mu_t, omega


def masked_precision(CWC, omega_gamma_tilde, p, sigma2_beta, mu_inv_sigma_u, mu_b):
    """(C^T W C) * Omega_gamma_tilde + blockdiag(I_p / sigma2_beta, E[1/sigma_u^2] diag(mu_b))."""
    ridge = np.concatenate([np.full(p, 1.0 / sigma2_beta), mu_inv_sigma_u * np.asarray(mu_b, dtype=float)])
    return CWC * omega_gamma_tilde + np.diag(ridge)


def sparse_chi(C, y, mu_gamma_tilde, mu, omega_gamma_tilde, omega_bv):
    """E_q[(1 - y_i c_i^T diag(gamma_tilde) theta)^2], floored."""
    chi = 1.0 - 2.0 * y * (C @ (mu_gamma_tilde * mu)) + np.einsum("ij,jk,ik->i", C, omega_gamma_tilde * omega_bv, C)
    return np.maximum(chi, CHI_FLOOR)


def _require_rho(rho):
    if rho is None:
        raise ValueError("the sparse model needs an explicit rho in (0, 1)")
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return rho


def sparse_sweep(state, C, y, backend=None):
    """One pass of the coordinate-ascent updates, in place on ``state``."""
    kern = backend or kernels
    p, m, prior = state.p, state.m, state.prior
    w = state.mu_a_inv
    CWC = (C.T * w) @ C
    prec = masked_precision(CWC, state.omega_gamma_tilde, p, prior.sigma2_beta, state.mu_inv_sigma_u, state.mu_b)
    linear = state.mu_gamma_tilde * (C.T @ ((1.0 + w) * y))
    mu, sigma, _ = gaussian_from_precision(prec, linear, name="q(beta,v) precision")
    omega = sigma + np.outer(mu, mu)

    Z = C[:, p:]
    mu_gamma = state.mu_gamma.copy()
    mu_b, eta = kern.sparse_local_updates(
        np.ascontiguousarray(CWC[p:, p:]),
        np.ascontiguousarray(CWC[p:, :p]),
        Z.T @ y,
        Z.T @ (w * y),
        mu,
        omega,
        p,
        mu_gamma,
        float(state.mu_inv_sigma_u),
        float(logit(state.rho)),
        ETA_CLIP,
    )
    n_sat = int(np.sum(np.abs(eta) > ETA_CLIP))
    if n_sat:
        log.debug("%d gamma logits clipped to +-%g", n_sat, ETA_CLIP)

    mu_t, omega_t = gamma_tilde_moments(mu_gamma, p)
    chi = sparse_chi(C, y, mu_t, mu, omega_t, omega)
    b_q = prior.b_u + 0.5 * float(mu_b @ np.diag(omega)[p:])

    state.mu_bv, state.sigma_bv, state.omega_bv = mu, sigma, omega
    state.mu_b, state.mu_gamma = mu_b, mu_gamma
    state.mu_gamma_tilde, state.omega_gamma_tilde = mu_t, omega_t
    state.chi, state.mu_a_inv = chi, chi**-0.5
    state.b_q_sigma_u = b_q
    state.mu_inv_sigma_u = (prior.a_u + 0.5 * m) / b_q
    state.n_saturated = n_sat


def bernoulli_kl(mu_gamma, rho):
    """sum_k KL(Bernoulli(mu_k) || Bernoulli(rho)) with 0 log 0 = 0."""
    g = np.asarray(mu_gamma, dtype=float)
    return float(np.sum(xlogy(g, g / rho) + xlogy(1.0 - g, (1.0 - g) / (1.0 - rho))))


def lower_bound_sparse(state, design, y):
    C = design.C
    y = np.asarray(y, dtype=float)
    n = C.shape[0]
    p, m, prior = state.p, state.m, state.prior
    mu, sigma, chi = state.mu_bv, state.sigma_bv, state.chi
    a_q = prior.a_u + 0.5 * m
    return float(
        (n - m) * np.log(2.0)
        - n
        + 0.5 * (p + m)
        - 0.5 * (n - m) * LOG_2PI
        + y @ (C @ (state.mu_gamma_tilde * mu))
        + 0.25 * np.sum(np.log(chi))
        + np.sum(log_bessel_k_half(np.sqrt(chi)))
        + 0.5 * logdet_spd(sigma, "Sigma_q(beta,v)")
        - 0.5 * p * np.log(prior.sigma2_beta)
        - (mu[:p] @ mu[:p] + np.trace(sigma[:p, :p])) / (2.0 * prior.sigma2_beta)
        - 0.5 * np.sum(1.0 / state.mu_b)
        + prior.a_u * np.log(prior.b_u)
        - gammaln(prior.a_u)
        - a_q * np.log(state.b_q_sigma_u)
        + gammaln(a_q)
        - bernoulli_kl(state.mu_gamma, state.rho)
    )


def init_sparse_state(design, prior, rho, n):
    p, m = design.p, design.m
    mu_gamma = np.full(m, rho)
    mu_t, omega_t = gamma_tilde_moments(mu_gamma, p)
    k = p + m
    return VbSparseState(
        mu_bv=np.zeros(k),
        sigma_bv=np.eye(k),
        omega_bv=np.eye(k),
        mu_b=np.ones(m),
        mu_gamma=mu_gamma,
        mu_gamma_tilde=mu_t,
        omega_gamma_tilde=omega_t,
        chi=np.ones(n),
        mu_a_inv=np.ones(n),
        b_q_sigma_u=prior.b_u,
        mu_inv_sigma_u=prior.a_u / prior.b_u,
        p=p,
        m=m,
        rho=rho,
        prior=prior,
    )


def fit_vb_sparse(design, y, rho=None, prior=None, init=None, backend=None):
    """Fit the spike-and-slab model.

    ``rho`` is the prior inclusion probability; it falls back to
    ``prior.rho`` and one of the two must be set. The
    per-variable loop over (b_k, gamma_k) runs in ascending k. Starts from
    mu_q(gamma) = rho, mu_q(b) = 1, mu_q(1/a) = 1 and E[1/sigma_u^2] = A_u / B_u
    unless ``init`` (a previous state) is given.
    """
    prior = prior or PriorConfig()
    rho = _require_rho(prior.rho if rho is None else rho)
    y = np.asarray(y, dtype=float)
    C = design.C
    n = C.shape[0]
    if n < 1:
        raise ValueError("need at least one observation")
    if design.m < 1:
        raise ValueError("the sparse model needs at least one penalized column")
    state = init_sparse_state(design, prior, rho, n)
    if init is not None:
        state.mu_a_inv = np.array(init.mu_a_inv, dtype=float)
        state.mu_inv_sigma_u = float(init.mu_inv_sigma_u)
        state.mu_b = np.array(init.mu_b, dtype=float)
        state.mu_gamma = np.array(init.mu_gamma, dtype=float)
        state.mu_gamma_tilde, state.omega_gamma_tilde = gamma_tilde_moments(state.mu_gamma, design.p)

    state.lb_trace, state.converged = coordinate_ascent(
        lambda: sparse_sweep(state, C, y, backend),
        lambda: lower_bound_sparse(state, design, y),
        prior.tol,
        prior.max_iter,
        "fit_vb_sparse",
        lambda: np.concatenate([state.coefficients, state.mu_a_inv]),
        prior.param_tol,
    )
    return state


def predict_sparse(state, c_new):
    """sign(c^T (mu_bv * mu_gamma_tilde)), zero mapped to +1."""
    score = np.asarray(c_new, dtype=float) @ state.coefficients
    out = np.where(score >= 0, 1, -1)
    return int(out) if out.ndim == 0 else out


def select_variables(state, threshold=0.5):
    """Indices k (0-based) with mu_q(gamma_k) >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return np.flatnonzero(state.mu_gamma >= threshold)


def inclusion_report(state):
    """Per-variable inclusion probability mu_q(gamma_k) next to the Gaussian
    tail P_q(v_k > 0) from the marginal of q(beta, v)."""
    sd = np.sqrt(np.diag(state.sigma_bv)[state.p :])
    return {
        "inclusion_probability": state.mu_gamma.copy(),
        "prob_v_positive": ndtr(state.mu_v / sd),
    }
