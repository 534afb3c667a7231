"""Fit any model variant with either engine, predict, and persist the result.

Model files are JSON with every float written to 17 significant digits, so a
save/load round trip reproduces all stored numbers exactly.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import (
    LabeledDataset,
    StandardizeTransform,
    build_penalty_design,
    build_random_intercept_design,
    group_indicator_matrix,
    standardize,
)
from .errors import DataError
from .mcmc import (
    GibbsConfig,
    effective_sample_size,
    gibbs_basic,
    gibbs_missing,
    gibbs_mixed,
    gibbs_sparse,
)
from .priors import PriorConfig
from .vb_basic import fit_vb_basic
from .vb_missing import conditional_fill, fit_vb_missing
from .vb_mixed import fit_vb_mixed
from .vb_sparse import fit_vb_sparse, inclusion_report

FORMAT = "vbsvm-model"
FORMAT_VERSION = 1
VARIANTS = ("basic", "mixed", "sparse", "missing")
ENGINES = ("vb", "gibbs")


@dataclass(frozen=True)
class FitOptions:
    variant: str
    engine: str = "vb"
    alpha: float = 1.0
    rho: float | None = None
    prior: PriorConfig = field(default_factory=PriorConfig)
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    standardize: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.variant == "sparse":
            rho = self.prior.rho if self.rho is None else self.rho
            if rho is None:
                raise ValueError("the sparse variant needs rho")

    @property
    def rho_value(self):
        return self.prior.rho if self.rho is None else self.rho

    def with_seed(self, seed):
        g = self.gibbs
        cfg = GibbsConfig(g.n_burn, g.n_keep, g.thin, seed, g.store_a)
        return FitOptions(self.variant, self.engine, self.alpha, self.rho, self.prior, cfg, self.standardize)


@dataclass
class FittedModel:
    variant: str
    engine: str
    columns: tuple
    transform: StandardizeTransform
    prior: PriorConfig
    params: dict
    meta: dict
    group_levels: tuple | None = None

    @property
    def coef(self):
        return self.params["coef"]

    def design_rows(self, D, mask=None, groups=None):
        """Standardized [1, d] rows (plus group indicators for a
        random-intercept model) with missing cells filled where supported."""
        D = np.array(D, dtype=float, ndmin=2)
        if D.shape[1] != len(self.columns):
            raise DataError(f"model expects {len(self.columns)} predictors, got {D.shape[1]}")
        if mask is None:
            mask = np.where(np.isnan(D), 0, 1)
        mask = np.asarray(mask).reshape(D.shape)
        Ds = self.transform.apply(np.where(mask == 1, D, 0.0))
        if not mask.all():
            if self.variant != "missing":
                raise DataError(f"{int((mask == 0).sum())} missing cells; only the missing variant can fill them")
            Ds = conditional_fill(Ds, mask, self.params["fill_mean"], self.params["fill_cov"])
        C = np.hstack([np.ones((Ds.shape[0], 1)), Ds])
        if self.group_levels is not None:
            if groups is None:
                raise DataError("random-intercept model needs group labels to predict")
            Z, _ = group_indicator_matrix(np.asarray(groups).astype(str), self.group_levels)
            C = np.hstack([C, Z])
        return C

    def scores(self, D, mask=None, groups=None):
        return self.design_rows(D, mask, groups) @ self.coef

    def predict(self, D, mask=None, groups=None):
        return np.where(self.scores(D, mask, groups) >= 0, 1, -1)

    def predict_dataset(self, ds):
        return self.predict(ds.D, ds.observed_mask(), ds.groups)

    def to_dict(self):
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "variant": self.variant,
            "engine": self.engine,
            "columns": list(self.columns),
            "group_levels": None if self.group_levels is None else list(self.group_levels),
            "transform": {"center": self.transform.center, "scale": self.transform.scale},
            "prior": self.prior.to_dict(),
            "params": self.params,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d, variant=None):
        if d.get("format") != FORMAT:
            raise DataError("not a model file")
        if d.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported model file version {d.get('version')}")
        if variant is not None and d["variant"] != variant:
            raise DataError(f"model file holds variant {d['variant']!r}, not {variant!r}")
        tr = StandardizeTransform(np.array(d["transform"]["center"], dtype=float), np.array(d["transform"]["scale"], dtype=float))
        params = {k: np.array(v, dtype=float) for k, v in d["params"].items()}
        levels = d.get("group_levels")
        return cls(
            d["variant"],
            d["engine"],
            tuple(d["columns"]),
            tr,
            PriorConfig.from_dict(d["prior"]),
            params,
            d["meta"],
            None if levels is None else tuple(levels),
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(dumps(self.to_dict()))
            fh.write("\n")

    @classmethod
    def load(cls, path, variant=None):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}: not valid JSON ({e})") from None
        return cls.from_dict(d, variant)


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("model files cannot hold non-finite numbers")
        text = format(obj, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=1):
    """JSON text with floats at 17 significant digits."""
    return _encode(obj, indent, 0)


def _standardized(ds, opts):
    if not opts.standardize:
        return ds, StandardizeTransform.identity(ds.d)
    D, tr = standardize(ds.D, ds.mask, ds.columns)
    return LabeledDataset(ds.y, D, ds.groups, ds.mask, ds.columns), tr


def _ess_summary(chain):
    coefs = chain.coefficient_draws()
    if chain.n_keep < 4:
        return {}
    ess = [effective_sample_size(coefs[:, j]) for j in range(coefs.shape[1])]
    return {"ess_min": min(ess), "ess_median": float(np.median(ess))}


def fit_model(ds, opts):
    """Fit ``opts.variant`` with ``opts.engine`` to ``ds``.

    Returns (FittedModel, raw) where raw is the VB state or Gibbs chain.
    """
    if ds.groups is not None:
        ds = LabeledDataset(ds.y, ds.D, np.asarray(ds.groups).astype(str), ds.mask, ds.columns)
    dss, tr = _standardized(ds, opts)
    prior, v, vb = opts.prior, opts.variant, opts.engine == "vb"
    params, meta, levels = {}, {}, None

    if v == "missing":
        raw = fit_vb_missing(dss, prior) if vb else gibbs_missing(dss, prior, opts.gibbs)
        if vb:
            params = {"coef": raw.mu_bu, "fill_mean": raw.mu_mu, "fill_cov": raw.psi_q_sigma}
        else:
            params = {
                "coef": raw.coefficient_mean(),
                "fill_mean": raw.draws["mu"].mean(axis=0),
                "fill_cov": raw.draws["Sigma"].mean(axis=0),
            }
    else:
        if v == "mixed" and ds.groups is not None:
            design = build_random_intercept_design(dss)
            levels = design.group_levels
        else:
            design = build_penalty_design(dss)
        y = dss.y
        if v == "basic":
            raw = fit_vb_basic(design.C, y, opts.alpha, prior.tol, prior.max_iter, param_tol=prior.param_tol) if vb else gibbs_basic(design.C, y, opts.alpha, opts.gibbs)
        elif v == "mixed":
            raw = fit_vb_mixed(design, y, prior) if vb else gibbs_mixed(design, y, prior, opts.gibbs)
        else:
            rho = opts.rho_value
            raw = fit_vb_sparse(design, y, rho, prior) if vb else gibbs_sparse(design, y, rho, prior, opts.gibbs)
        if vb:
            params = {"coef": raw.mu_beta if v == "basic" else (raw.coefficients if v == "sparse" else raw.mu_bu)}
        else:
            params = {"coef": raw.coefficient_mean()}
        if v == "sparse":
            if vb:
                rep = inclusion_report(raw)
                params["inclusion_probability"] = rep["inclusion_probability"]
                params["prob_v_positive"] = rep["prob_v_positive"]
            else:
                params["inclusion_probability"] = raw.draws["gamma"].mean(axis=0)
                vdraws = raw.draws["beta_v"][:, raw.p :] * raw.draws["gamma"]
                params["prob_v_positive"] = (vdraws > 0).mean(axis=0)

    if vb:
        meta = {
            "n_iter": raw.n_iter,
            "converged": bool(raw.converged),
            "lower_bound": raw.lb_trace[-1],
            "lb_trace": list(raw.lb_trace),
        }
        if v == "basic":
            meta["alpha"] = float(opts.alpha)
    else:
        g = opts.gibbs
        meta = {"n_burn": g.n_burn, "n_keep": g.n_keep, "thin": g.thin, "seed": g.seed, **_ess_summary(raw)}
        if v == "basic":
            meta["alpha"] = float(opts.alpha)
    if v == "sparse":
        meta["rho"] = float(opts.rho_value)

    model = FittedModel(v, opts.engine, ds.columns, tr, prior, {k: np.asarray(a, dtype=float) for k, a in params.items()}, meta, levels)
    return model, raw
