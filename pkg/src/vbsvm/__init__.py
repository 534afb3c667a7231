"""Variational Bayes and Gibbs sampling for Bayesian support vector machines."""

from .data import (
    DesignPair,
    LabeledDataset,
    StandardizeTransform,
    build_penalty_design,
    build_random_intercept_design,
    read_csv,
    split_holdout,
    standardize,
    write_csv,
)
from .errors import ConvergenceWarning, DataError, NumericalError
from .evaluate import ber, compare, repeated_holdout
from .mcmc import GibbsChain, GibbsConfig, gibbs_basic, gibbs_missing, gibbs_mixed, gibbs_sparse, posterior_summary
from .model import FitOptions, FittedModel, fit_model
from .priors import PriorConfig
from .simulate import SimSpec, apply_mcar, simulate_logistic
from .vb_basic import fit_vb_basic, predict_linear
from .vb_missing import build_missing_pattern, fit_vb_missing, impute, predict_missing
from .vb_mixed import fit_vb_mixed, implied_penalty, predict_mixed
from .vb_sparse import fit_vb_sparse, inclusion_report, predict_sparse, select_variables

__version__ = "0.1.0"

__all__ = [
    "ConvergenceWarning",
    "DataError",
    "DesignPair",
    "FitOptions",
    "FittedModel",
    "GibbsChain",
    "GibbsConfig",
    "LabeledDataset",
    "NumericalError",
    "PriorConfig",
    "SimSpec",
    "StandardizeTransform",
    "apply_mcar",
    "ber",
    "build_missing_pattern",
    "build_penalty_design",
    "build_random_intercept_design",
    "compare",
    "fit_model",
    "fit_vb_basic",
    "fit_vb_missing",
    "fit_vb_mixed",
    "fit_vb_sparse",
    "gibbs_basic",
    "gibbs_missing",
    "gibbs_mixed",
    "gibbs_sparse",
    "impute",
    "implied_penalty",
    "inclusion_report",
    "posterior_summary",
    "predict_linear",
    "predict_missing",
    "predict_mixed",
    "predict_sparse",
    "read_csv",
    "repeated_holdout",
    "select_variables",
    "simulate_logistic",
    "split_holdout",
    "standardize",
    "write_csv",
]
