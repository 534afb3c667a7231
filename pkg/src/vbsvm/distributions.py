"""Densities, moments and samplers for the GIG, inverse Gaussian, inverse gamma,
inverse Wishart and multivariate normal families.

Random streams come from NumPy's counter-based Philox generator; independent
streams for chains and replicates are derived with ``SeedSequence.spawn``, so a
given seed reproduces the same draws on every platform.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from ._linalg import cholesky_lower
from .errors import NumericalError

# chi_{q(a_i)} and the GIG conditional argument are floored here: a zero margin
# residual would otherwise give an infinite E[1/a].
CHI_FLOOR = 1e-10
# Inverse-Gaussian mean cap used when |v_k| is (numerically) zero.
IG_MEAN_CAP = 1e12


def make_rng(seed=None):
    """Philox-backed generator. ``seed`` may be an int or a ``SeedSequence``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed, n):
    """``n`` independent generators derived from one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]


@dataclass(frozen=True)
class GigParams:
    gamma: float
    psi: float
    chi: float

    def __post_init__(self):
        if not (self.psi > 0 and self.chi > 0):
            raise ValueError("GIG requires psi > 0 and chi > 0")


@dataclass(frozen=True)
class InverseGaussianParams:
    mu: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError("Inverse-Gaussian requires mu > 0 and lambda > 0")


@dataclass(frozen=True)
class InverseGammaParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("inverse gamma requires shape a > 0 and rate b > 0")


@dataclass(frozen=True)
class InverseWishartParams:
    scale: np.ndarray
    dof: float

    def __post_init__(self):
        scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
        object.__setattr__(self, "scale", scale)
        d = scale.shape[0]
        if scale.shape != (d, d) or not np.allclose(scale, scale.T):
            raise ValueError("inverse Wishart scale must be a symmetric square matrix")
        if not self.dof > d - 1:
            raise ValueError(f"inverse Wishart needs dof > {d - 1}, got {self.dof}")


def _half_integer_order(order):
    twice = 2.0 * order
    if abs(twice - round(twice)) > 1e-12 or int(round(twice)) % 2 == 0:
        raise ValueError(f"only half-integer Bessel orders are supported, got {order}")
    return abs(order)


def log_bessel_k_half_integer(order, x):
    """log K_order(x) for half-integer ``order`` using the terminating series

    K_{n+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_{k=0}^{n} (n+k)! / (k! (n-k)!) (2x)^{-k}.
    """
    nu = _half_integer_order(order)
    n = int(round(nu - 0.5))
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("Bessel argument must be positive")
    series = np.zeros_like(x)
    for k in range(n + 1):
        coef = factorial(n + k) / (factorial(k) * factorial(n - k))
        series = series + coef * (2.0 * x) ** (-k)
    out = 0.5 * np.log(np.pi / (2.0 * x)) - x + np.log(series)
    return out if out.ndim else float(out)


def gig_logpdf(x, p: GigParams):
    """Log density of GIG(gamma, psi, chi) at ``x``."""
    x = np.asarray(x, dtype=float)
    omega = np.sqrt(p.psi * p.chi)
    log_norm = 0.5 * p.gamma * np.log(p.psi / p.chi) - np.log(2.0) - log_bessel_k_half_integer(p.gamma, omega)
    with np.errstate(divide="ignore"):
        out = log_norm + (p.gamma - 1.0) * np.log(x) - 0.5 * (p.chi / x + p.psi * x)
    return out if out.ndim else float(out)


def gig_moments(p: GigParams):
    """(E[x], E[1/x]) of a GIG with half-integer order.

    For order 1/2 and psi = 1 these are sqrt(chi) + 1 and chi^{-1/2}.
    """
    _half_integer_order(p.gamma)
    omega = np.sqrt(p.psi * p.chi)
    lk = log_bessel_k_half_integer(p.gamma, omega)
    mean = np.sqrt(p.chi / p.psi) * np.exp(log_bessel_k_half_integer(p.gamma + 1.0, omega) - lk)
    mean_inv = np.sqrt(p.psi / p.chi) * np.exp(log_bessel_k_half_integer(p.gamma - 1.0, omega) - lk)
    return float(mean), float(mean_inv)


def inverse_gaussian_logpdf(x, p: InverseGaussianParams):
    x = np.asarray(x, dtype=float)
    return 0.5 * np.log(p.lam / (2.0 * np.pi * x**3)) - p.lam * (x - p.mu) ** 2 / (2.0 * x * p.mu**2)


def inverse_gamma_logpdf(x, p: InverseGammaParams):
    x = np.asarray(x, dtype=float)
    return p.a * np.log(p.b) - gammaln(p.a) - (p.a + 1.0) * np.log(x) - p.b / x


def _inverse_gaussian_transform(mu, lam, normal, uniform):
    # Michael-Schucany-Haas root, written as mu * 4 lam / (w (1 + sqrt(1 + 4 lam / w))^2)
    # with w = mu * z^2; the textbook form cancels catastrophically for large mu.
    w = mu * normal * normal
    with np.errstate(divide="ignore", invalid="ignore"):
        root = mu * 4.0 * lam / (w * (1.0 + np.sqrt(1.0 + 4.0 * lam / w)) ** 2)
    root = np.where(w > 0, root, mu)
    return np.where(uniform <= mu / (mu + root), root, mu * mu / root)


def sample_inverse_gaussian(mu, lam, rng, size=None):
    """Inverse-Gaussian(mu, lam) draws by transformation with one rejection step.

    ``mu`` and ``lam`` broadcast against ``size``.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(~(mu > 0)) or np.any(~(lam > 0)):
        raise ValueError("Inverse-Gaussian requires mu > 0 and lambda > 0")
    shape = np.broadcast_shapes(mu.shape, lam.shape) if size is None else size
    normal = rng.standard_normal(shape)
    uniform = rng.random(shape)
    out = _inverse_gaussian_transform(np.minimum(mu, IG_MEAN_CAP), lam, normal, uniform)
    return out if np.ndim(out) else float(out)


def sample_gig_half(chi, rng, size=None):
    """Draws from GIG(1/2, 1, chi).

    If Y ~ Inverse-Gaussian(chi^{-1/2}, 1) then 1/Y ~ GIG(1/2, 1, chi).
    ``chi`` is floored at ``CHI_FLOOR``.
    """
    chi = np.maximum(np.asarray(chi, dtype=float), CHI_FLOOR)
    inv = sample_inverse_gaussian(1.0 / np.sqrt(chi), 1.0, rng, size=size)
    return 1.0 / inv


def sample_inverse_gamma(a, b, rng, size=None):
    """IG(a, b) draws, density b^a / Gamma(a) x^{-a-1} exp(-b / x)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise ValueError("inverse gamma requires a > 0 and b > 0")
    out = b / rng.gamma(a, 1.0, size=size)
    return out if np.ndim(out) else float(out)


def sample_inverse_wishart(scale, dof, rng):
    """One IW(scale, dof) draw via the Bartlett decomposition.

    With scale = U U^T and A the Bartlett factor of a W(I, dof) matrix,
    Sigma^{-1} = U^{-T} A A^T U^{-1} is W(scale^{-1}, dof), so
    Sigma = G^T G with G = A^{-1} U^T.
    """
    p = InverseWishartParams(scale, dof)
    d = p.scale.shape[0]
    try:
        U = np.linalg.cholesky(p.scale)
    except np.linalg.LinAlgError:
        raise NumericalError("inverse Wishart scale matrix is not positive definite") from None
    A = np.zeros((d, d))
    A[np.diag_indices(d)] = np.sqrt(rng.chisquare(dof - np.arange(d)))
    tril = np.tril_indices(d, -1)
    A[tril] = rng.standard_normal(len(tril[0]))
    G = solve_triangular(A, U.T, lower=True)
    sigma = G.T @ G
    return 0.5 * (sigma + sigma.T)


def sample_mvn(mean, cov, rng, size=None):
    mean = np.asarray(mean, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    k = mean.shape[0]
    if k == 0:
        return np.zeros((0,) if size is None else (size, 0))
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NumericalError("covariance matrix passed to sample_mvn is not positive definite") from None
    z = rng.standard_normal((k,) if size is None else (size, k))
    return mean + z @ L.T


def sample_mvn_canonical(linear, prec, rng, name="precision matrix"):
    """Draw from N(prec^{-1} linear, prec^{-1}); returns (draw, mean)."""
    L = cholesky_lower(prec, name=name)
    k = L.shape[0]
    if k == 0:
        return np.zeros(0), np.zeros(0)
    mean = solve_triangular(L.T, solve_triangular(L, linear, lower=True), lower=False)
    z = rng.standard_normal(k)
    return mean + solve_triangular(L.T, z, lower=False), mean
