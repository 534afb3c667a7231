"""Coordinate-ascent VB for the linear SVM pseudo-likelihood with a fixed
penalty alpha.

The hinge loss is written as a location-scale mixture of normals over an
auxiliary a_i > 0, which makes q(beta) Gaussian and each q(a_i) a
GIG(1/2, 1, chi_i). The prior is beta ~ N(0, I / (4 alpha)), so the
precision update carries ``4 * alpha``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._ascent import coordinate_ascent
from ._linalg import gaussian_from_precision, logdet_spd
from .distributions import CHI_FLOOR
from .special import log_bessel_k_half

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class VbBasicState:
    mu_beta: np.ndarray
    sigma_beta: np.ndarray
    chi: np.ndarray
    mu_a_inv: np.ndarray
    alpha: float
    lb_trace: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self):
        return len(self.lb_trace)


def hinge_mixture_integrand(y, eta, a):
    """Augmented pseudo-density (2 pi a)^{-1/2} exp(-(1 + a - y eta)^2 / (2a)).

    Integrating over a in (0, inf) gives exp(-2 max(0, 1 - y eta)).
    """
    a = np.asarray(a, dtype=float)
    return np.exp(-((1.0 + a - y * eta) ** 2) / (2.0 * a)) / np.sqrt(2.0 * np.pi * a)


def chi_update(X, y, mu, sigma):
    """E_q[(1 - y_i x_i^T beta)^2] = (1 - y_i x_i^T mu)^2 + x_i^T Sigma x_i."""
    resid = 1.0 - y * (X @ mu)
    return np.maximum(resid**2 + np.einsum("ij,jk,ik->i", X, sigma, X), CHI_FLOOR)


def basic_sweep(X, y, alpha, mu_a_inv):
    """One pass of the two update steps. Returns (mu, Sigma, chi, mu_a_inv)."""
    p = X.shape[1]
    prec = (X.T * mu_a_inv) @ X + 4.0 * alpha * np.eye(p)
    mu, sigma, _ = gaussian_from_precision(prec, X.T @ ((1.0 + mu_a_inv) * y), name="q(beta) precision")
    chi = chi_update(X, y, mu, sigma)
    return mu, sigma, chi, chi**-0.5


def lower_bound_basic(state, X, y):
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    alpha = state.alpha
    mu, sigma, chi = state.mu_beta, state.sigma_beta, state.chi
    return float(
        0.5 * p
        - n
        + n * np.log(2.0)
        - 0.5 * n * LOG_2PI
        + 0.5 * p * np.log(4.0 * alpha)
        + 0.5 * (logdet_spd(sigma, "Sigma_q(beta)") if p else 0.0)
        - 2.0 * alpha * (mu @ mu + np.trace(sigma))
        + y @ (X @ mu)
        + 0.25 * np.sum(np.log(chi))
        + np.sum(log_bessel_k_half(np.sqrt(chi)))
    )


def fit_vb_basic(X, y, alpha, tol=1e-10, max_iter=5000, init=None, param_tol=None):
    """Fit q(beta) q(a) for fixed ``alpha``.

    ``init`` may supply a starting ``mu_a_inv`` (positive n-vector); the
    default is all ones. Iterates until the lower bound increases by less
    than ``tol`` (and, if ``param_tol`` is set, mu and E[1/a] move by
    less than ``param_tol``); ``converged`` is False if ``max_iter`` is hit first.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    n, p = X.shape
    mu_a_inv = np.ones(n) if init is None else np.asarray(getattr(init, "mu_a_inv", init), dtype=float).copy()
    if mu_a_inv.shape != (n,) or np.any(mu_a_inv <= 0):
        raise ValueError("initial mu_a_inv must be a positive n-vector")
    state = VbBasicState(np.zeros(p), np.eye(p), np.ones(n), mu_a_inv, float(alpha))

    def sweep():
        state.mu_beta, state.sigma_beta, state.chi, state.mu_a_inv = basic_sweep(X, y, alpha, state.mu_a_inv)

    state.lb_trace, state.converged = coordinate_ascent(
        sweep, lambda: lower_bound_basic(state, X, y), tol, max_iter, "fit_vb_basic", lambda: np.concatenate([state.mu_beta, state.mu_a_inv]), param_tol
    )
    return state


def predict_linear(mu, x_new):
    """sign(x^T mu) with sign(0) taken as +1. Accepts a vector or a matrix of rows."""
    score = np.asarray(x_new, dtype=float) @ np.asarray(mu, dtype=float)
    out = np.where(score >= 0, 1, -1)
    return int(out) if out.ndim == 0 else out
