from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class PriorConfig:
    """Fixed hyperparameters and solver controls shared by every fitter.

    Defaults are the non-informative settings: sigma2_beta = 1e8,
    A_u = B_u = 0.01, sigma2_mu = 1e8 and Psi = 0.01 I. With the default
    ``nu=None`` the degrees of freedom resolve to max(3, d), the smallest
    value at least 3 that keeps IW(Psi, nu) proper. ``psi`` is a
    scalar multiple of the identity unless a full matrix is given. ``rho`` has
    no default because the sparse model must be told the sparsity level.
    ``param_tol`` optionally tightens convergence to a max-norm change of the
    coefficient means and E[1/a] (see ``coordinate_ascent``).
    """

    sigma2_beta: float = 1e8
    a_u: float = 0.01
    b_u: float = 0.01
    rho: float | None = None
    sigma2_mu: float = 1e8
    psi: float | np.ndarray = 0.01
    nu: float | None = None
    tol: float = 1e-10
    max_iter: int = 5000
    param_tol: float | None = None

    def __post_init__(self):
        for name in ("sigma2_beta", "a_u", "b_u", "sigma2_mu", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.rho is not None and not 0 < self.rho < 1:
            raise ValueError("rho must lie strictly between 0 and 1")
        if self.param_tol is not None and not self.param_tol > 0:
            raise ValueError("param_tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")

    def nu_for(self, d):
        nu = max(3.0, float(d)) if self.nu is None else float(self.nu)
        if not nu > d - 1:
            raise ValueError(f"nu must exceed d - 1 = {d - 1}, got {nu}")
        return nu

    def psi_matrix(self, d):
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim == 0:
            return float(psi) * np.eye(d)
        if psi.shape != (d, d):
            raise ValueError(f"psi must be {d} x {d}")
        return psi

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        psi = np.asarray(self.psi, dtype=float)
        return {
            "sigma2_beta": self.sigma2_beta,
            "a_u": self.a_u,
            "b_u": self.b_u,
            "rho": self.rho,
            "sigma2_mu": self.sigma2_mu,
            "psi": float(psi) if psi.ndim == 0 else psi.tolist(),
            "nu": self.nu,
            "tol": self.tol,
            "max_iter": int(self.max_iter),
            "param_tol": self.param_tol,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if isinstance(d.get("psi"), list):
            d["psi"] = np.array(d["psi"], dtype=float)
        return cls(**d)
