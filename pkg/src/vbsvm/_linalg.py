import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .errors import NumericalError

log = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_STOP = 1e-6


def cholesky_lower(a, name="matrix", jitter=True):
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    On failure, adds ``JITTER_START * mean(diag)`` to the diagonal and
    escalates by x10 up to ``JITTER_STOP * mean(diag)`` before giving up.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        if not jitter:
            raise NumericalError(f"{name} is not positive definite") from None
    scale = float(np.mean(np.diag(a)))
    if not np.isfinite(scale) or scale <= 0:
        raise NumericalError(f"{name} is not positive definite (diagonal mean {scale})")
    eps = JITTER_START
    while eps <= JITTER_STOP * (1 + 1e-12):
        try:
            L = np.linalg.cholesky(a + eps * scale * np.eye(a.shape[0]))
        except np.linalg.LinAlgError:
            eps *= 10.0
            continue
        log.warning("%s needed jitter %.1e x mean diagonal to factor", name, eps)
        return L
    raise NumericalError(f"{name} is not positive definite even after jitter {JITTER_STOP:g}")


def inverse_from_precision(prec, name="precision matrix"):
    """Return (covariance, log|covariance|) from an SPD precision matrix."""
    L = cholesky_lower(prec, name=name)
    k = L.shape[0]
    if k == 0:
        return np.zeros((0, 0)), 0.0
    Linv = solve_triangular(L, np.eye(k), lower=True)
    cov = Linv.T @ Linv
    cov = 0.5 * (cov + cov.T)
    logdet_cov = -2.0 * np.sum(np.log(np.diag(L)))
    return cov, float(logdet_cov)


def gaussian_from_precision(prec, linear, name="precision matrix"):
    """Mean, covariance and log|covariance| of N(prec^{-1} linear, prec^{-1}).

    One Cholesky factorization serves both the solve and the inverse.
    """
    L = cholesky_lower(prec, name=name)
    k = L.shape[0]
    if k == 0:
        return np.zeros(0), np.zeros((0, 0)), 0.0
    Linv = solve_triangular(L, np.eye(k), lower=True)
    cov = Linv.T @ Linv
    cov = 0.5 * (cov + cov.T)
    mean = Linv.T @ (Linv @ linear)
    return mean, cov, float(-2.0 * np.sum(np.log(np.diag(L))))


def logdet_spd(a, name="matrix"):
    L = cholesky_lower(a, name=name, jitter=False)
    return float(2.0 * np.sum(np.log(np.diag(L))))


def is_spd(a):
    try:
        cho_factor(np.asarray(a, dtype=float), lower=True)
    except (LinAlgError, ValueError):
        return False
    return True


def solve_spd(a, b):
    return cho_solve(cho_factor(a, lower=True), b)
