"""Scalar special functions used by the variational lower bounds.

Everything here returns log-scale values where a quantity can under- or
overflow (``K_{1/2}`` at large arguments, the multivariate gamma function).
"""

import numpy as np
from scipy.special import gammaln, multigammaln

HALF_LOG_HALF_PI = 0.5 * np.log(0.5 * np.pi)


def _positive(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError(f"{name} must be strictly positive")
    return x


def log_bessel_k_half(x):
    """log K_{1/2}(x) for x > 0, via K_{1/2}(x) = sqrt(pi / (2x)) exp(-x)."""
    x = _positive(x)
    out = HALF_LOG_HALF_PI - 0.5 * np.log(x) - x
    return out if out.ndim else float(out)


def log_bessel_k_three_halves(x):
    """log K_{3/2}(x) = log K_{1/2}(x) + log(1 + 1/x)."""
    x = _positive(x)
    out = HALF_LOG_HALF_PI - 0.5 * np.log(x) - x + np.log1p(1.0 / x)
    return out if out.ndim else float(out)


def expit(x):
    """Logistic function, evaluated branch-wise so it neither overflows nor
    rounds tiny probabilities to exactly zero before the subnormal range."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def logit(p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ValueError("logit is only defined on the open interval (0, 1)")
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


def log_multivariate_gamma(d, x):
    """log Gamma_d(x) = d(d-1)/4 log(pi) + sum_j log Gamma(x + (1 - j)/2).

    Raises ``ValueError`` unless ``x > (d - 1) / 2``.
    """
    d = int(d)
    if d < 1:
        raise ValueError("dimension must be a positive integer")
    if not x > 0.5 * (d - 1):
        raise ValueError(f"log_multivariate_gamma needs x > {(d - 1) / 2}, got {x}")
    if d == 1:
        return float(gammaln(x))
    return float(multigammaln(x, d))
