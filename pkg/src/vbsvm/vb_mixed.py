"""VB for the mixed-model SVM: fixed effects beta with a N(0, sigma2_beta I)
prior and random effects u ~ N(0, sigma_u^2 I) with sigma_u^2 ~ IG(A_u, B_u).

With the penalty design (X = 1, Z = D) sigma_u^2 = 1 / (4 alpha) and the fit
infers the penalty; with group indicators in Z it is a random-intercept model.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._ascent import coordinate_ascent
from ._linalg import gaussian_from_precision, logdet_spd
from .priors import PriorConfig
from .special import log_bessel_k_half
from .vb_basic import LOG_2PI, chi_update, predict_linear


@dataclass
class VbMixedState:
    mu_bu: np.ndarray
    sigma_bu: np.ndarray
    chi: np.ndarray
    mu_a_inv: np.ndarray
    b_q_sigma_u: float
    mu_inv_sigma_u: float
    p: int
    m: int
    prior: PriorConfig
    lb_trace: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self):
        return len(self.lb_trace)

    @property
    def mu_beta(self):
        return self.mu_bu[: self.p]

    @property
    def mu_u(self):
        return self.mu_bu[self.p :]

    @property
    def shape_q_sigma_u(self):
        return self.prior.a_u + 0.5 * self.m


def sigma_u_rate(b_u, mu_u, sigma_u):
    """B_q(sigma_u^2) = B_u + (|mu_u|^2 + tr Sigma_u) / 2."""
    return b_u + 0.5 * (mu_u @ mu_u + np.trace(sigma_u))


def mixed_sweep(C, y, p, prior, mu_a_inv, mu_inv_sigma_u, update_sigma_u=True):
    """One pass over q(beta, u), q(a) and q(sigma_u^2).

    Returns (mu, Sigma, chi, mu_a_inv, B_q, mu_inv_sigma_u). With
    ``update_sigma_u=False`` the precision E[1/sigma_u^2] is held fixed.
    """
    k = C.shape[1]
    m = k - p
    ridge = np.concatenate([np.full(p, 1.0 / prior.sigma2_beta), np.full(m, mu_inv_sigma_u)])
    prec = (C.T * mu_a_inv) @ C + np.diag(ridge)
    mu, sigma, _ = gaussian_from_precision(prec, C.T @ ((1.0 + mu_a_inv) * y), name="q(beta,u) precision")
    chi = chi_update(C, y, mu, sigma)
    b_q = sigma_u_rate(prior.b_u, mu[p:], sigma[p:, p:])
    if update_sigma_u:
        mu_inv_sigma_u = (prior.a_u + 0.5 * m) / b_q
    return mu, sigma, chi, chi**-0.5, b_q, mu_inv_sigma_u


def lower_bound_mixed(state, design, y):
    C = design.C
    n = C.shape[0]
    p, m = state.p, state.m
    prior = state.prior
    mu, sigma, chi = state.mu_bu, state.sigma_bu, state.chi
    a_q = prior.a_u + 0.5 * m
    return float(
        0.5 * (p + m)
        - n
        + n * np.log(2.0)
        - 0.5 * n * LOG_2PI
        - 0.5 * p * np.log(prior.sigma2_beta)
        + 0.5 * logdet_spd(sigma, "Sigma_q(beta,u)")
        - (mu[:p] @ mu[:p] + np.trace(sigma[:p, :p])) / (2.0 * prior.sigma2_beta)
        + prior.a_u * np.log(prior.b_u)
        - gammaln(prior.a_u)
        - a_q * np.log(state.b_q_sigma_u)
        + gammaln(a_q)
        + y @ (C @ mu)
        + 0.25 * np.sum(np.log(chi))
        + np.sum(log_bessel_k_half(np.sqrt(chi)))
    )


def fit_vb_mixed(design, y, prior=None, init=None):
    """Fit q(beta, u) q(sigma_u^2) q(a) by coordinate ascent.

    Starts from mu_q(1/a) = 1 and E[1/sigma_u^2] = A_u / B_u unless ``init``
    (a previous state) is given.
    """
    prior = prior or PriorConfig()
    y = np.asarray(y, dtype=float)
    C = design.C
    n = C.shape[0]
    if n < 1:
        raise ValueError("need at least one observation")
    p, m = design.p, design.m
    if init is None:
        mu_a_inv = np.ones(n)
        mu_inv_sigma_u = prior.a_u / prior.b_u
    else:
        mu_a_inv = np.array(init.mu_a_inv, dtype=float)
        mu_inv_sigma_u = float(init.mu_inv_sigma_u)
    state = VbMixedState(
        np.zeros(p + m), np.eye(p + m), np.ones(n), mu_a_inv, prior.b_u, mu_inv_sigma_u, p, m, prior
    )

    def sweep():
        (state.mu_bu, state.sigma_bu, state.chi, state.mu_a_inv, state.b_q_sigma_u, state.mu_inv_sigma_u) = mixed_sweep(
            C, y, p, prior, state.mu_a_inv, state.mu_inv_sigma_u
        )

    state.lb_trace, state.converged = coordinate_ascent(
        sweep,
        lambda: lower_bound_mixed(state, design, y),
        prior.tol,
        prior.max_iter,
        "fit_vb_mixed",
        lambda: np.concatenate([state.mu_bu, state.mu_a_inv]),
        prior.param_tol,
    )
    return state


def implied_penalty(state):
    """alpha = 1 / (4 E_q[sigma_u^2]) with E_q[sigma_u^2] = B_q / (A_u + m/2 - 1)."""
    shape = state.shape_q_sigma_u
    if not shape > 1:
        raise ValueError(f"E_q[sigma_u^2] is infinite: A_u + m/2 = {shape} <= 1")
    return float((shape - 1.0) / (4.0 * state.b_q_sigma_u))


def predict_mixed(state, c_new):
    return predict_linear(state.mu_bu, c_new)
