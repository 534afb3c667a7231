"""Synthetic logistic data and MCAR corruption.

The generator draws beta ~ N(0, 1), u ~ N(0, I_d), rows d_i ~ N(0, I_d) and
q_i ~ Bernoulli(expit(beta + d_i^T u)), then sets y_i = 2 q_i - 1.
"""

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .distributions import make_rng
from .errors import DataError
from .special import expit


@dataclass(frozen=True)
class SimSpec:
    n: int
    d: int
    seed: int | None = None
    missing_fraction: float = 0.0

    def __post_init__(self):
        if int(self.n) < 1 or int(self.d) < 1:
            raise ValueError("n and d must be positive")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise ValueError("missing_fraction must lie in [0, 1)")


def draw_logistic_data(beta, u, n, rng):
    """n fresh rows from the generator with a given truth (beta, u)."""
    u = np.asarray(u, dtype=float)
    D = rng.standard_normal((n, u.shape[0]))
    q = rng.random(n) < expit(beta + D @ u)
    return LabeledDataset(np.where(q, 1.0, -1.0), D)


def simulate_logistic(spec):
    """Returns (dataset, beta, u); MCAR masking applied if requested."""
    rng = make_rng(spec.seed)
    beta = float(rng.standard_normal())
    u = rng.standard_normal(spec.d)
    ds = draw_logistic_data(beta, u, spec.n, rng)
    if spec.missing_fraction > 0:
        ds = apply_mcar(ds, spec.missing_fraction, rng)
    return ds, beta, u


def bayes_rule(beta, u, D):
    """sign(beta + d^T u), zero mapped to +1."""
    return np.where(beta + np.asarray(D, dtype=float) @ np.asarray(u, dtype=float) >= 0, 1, -1)


def apply_mcar(ds, fraction, rng, columns=None, max_tries=100):
    """Mask each predictor cell independently with probability ``fraction``.

    ``columns`` restricts masking to those column indices. A draw that masks a
    whole column is redrawn up to ``max_tries`` times. Existing missing cells
    stay missing.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    n, d = ds.D.shape
    cols = np.arange(d) if columns is None else np.asarray(columns, dtype=int)
    base = ds.observed_mask().copy()
    if fraction == 0.0:
        return ds
    for _ in range(max_tries):
        drop = rng.random((n, cols.size)) < fraction
        mask = base.copy()
        mask[:, cols] = np.where(drop, 0, mask[:, cols])
        if mask.sum(axis=0).min() > 0:
            return LabeledDataset(ds.y, np.where(mask == 1, ds.D, np.nan), ds.groups, mask, ds.columns)
    raise DataError(f"MCAR masking emptied a column in {max_tries} attempts")
