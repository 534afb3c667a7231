"""Command-line interface: simulate, fit, predict, evaluate, compare.

Exit codes: 0 success (a non-converged fit still exits 0 with a warning),
2 usage error, 3 data error, 4 numerical failure. Diagnostics go to stderr.
Wall-clock timings are written to a ``<output>.meta.json`` sidecar so the
primary output file is byte-reproducible for a fixed seed.
"""

import argparse
import contextlib
import csv
import json
import logging
import sys
import time
import warnings

import numpy as np

from . import __version__
from .data import MISSING_TOKENS, read_csv, to_pm_labels, write_csv
from .errors import DataError, NumericalError
from .evaluate import PROFILES, compare, format_report, repeated_holdout
from .mcmc import GibbsConfig, write_chain
from .model import ENGINES, VARIANTS, FitOptions, FittedModel, dumps, fit_model
from .priors import PriorConfig
from .simulate import SimSpec, simulate_logistic

log = logging.getLogger("vbsvm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


def _write_meta(path, payload):
    if path in (None, "-"):
        return
    with open(f"{path}.meta.json", "w") as fh:
        fh.write(dumps(payload) + "\n")


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _add_data_args(p):
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--label", default="y", help="label column (default y)")
    p.add_argument("--group", default=None, help="group column for a random-intercept model")


def _add_model_args(p):
    p.add_argument("--variant", choices=VARIANTS, default="mixed")
    p.add_argument("--engine", choices=ENGINES, default="vb")
    p.add_argument("--alpha", type=float, default=1.0, help="fixed penalty for the basic variant")
    p.add_argument("--rho", type=float, default=None, help="prior inclusion probability (sparse variant)")
    p.add_argument("--sigma2-beta", type=float, default=1e8)
    p.add_argument("--a-u", type=float, default=0.01)
    p.add_argument("--b-u", type=float, default=0.01)
    p.add_argument("--sigma2-mu", type=float, default=1e8)
    p.add_argument("--psi", type=float, default=0.01, help="Psi = psi * I")
    p.add_argument("--nu", type=float, default=None, help="inverse-Wishart dof (default max(3, d))")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--param-tol", type=float, default=None, help="also require coefficient means and E[1/a] to settle to this max-norm change")
    p.add_argument("--n-burn", type=int, default=5000)
    p.add_argument("--n-keep", type=int, default=5000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-standardize", action="store_true")


def _fit_options(a):
    prior = PriorConfig(
        sigma2_beta=a.sigma2_beta,
        a_u=a.a_u,
        b_u=a.b_u,
        rho=a.rho,
        sigma2_mu=a.sigma2_mu,
        psi=a.psi,
        nu=a.nu,
        tol=a.tol,
        max_iter=a.max_iter,
        param_tol=a.param_tol,
    )
    gibbs = GibbsConfig(a.n_burn, a.n_keep, a.thin, a.seed)
    return FitOptions(a.variant, a.engine, a.alpha, a.rho, prior, gibbs, not a.no_standardize)


def build_parser():
    ap = argparse.ArgumentParser(prog="vbsvm", description="Bayesian SVM classification by VB or Gibbs sampling")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic logistic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--missing-fraction", type=float, default=0.0)
    p.add_argument("--out", default=None, help="output CSV (stdout if omitted)")

    p = sub.add_parser("fit", help="fit a model and save it")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--chain-out", default=None, help="write retained Gibbs draws here")

    p = sub.add_parser("predict", help="classify rows with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="y", help="label column to ignore if present")
    p.add_argument("--group", default=None)
    p.add_argument("--variant", choices=VARIANTS, default=None, help="require this model variant")
    p.add_argument("--scores", action="store_true", help="also write the linear score")
    p.add_argument("--out", default=None)

    for name, text in (("evaluate", "repeated hold-out BER"), ("compare", "paired vb/gibbs/baseline BER")):
        p = sub.add_parser(name, help=text)
        _add_data_args(p)
        _add_model_args(p)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--profile", choices=sorted(PROFILES), default="paper")
        p.add_argument("--train-fraction", type=float, default=0.75)
        p.add_argument("--observed-test", action="store_true", help="draw test rows only from fully observed rows")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", default=None)
        if name == "compare":
            p.add_argument("--engines", default="vb,gibbs", help="comma-separated engines")
            p.add_argument("--baseline-pred", default=None, help="CSV of externally computed labels, one per data row")
    return ap


def cmd_simulate(a):
    ds, beta, u = simulate_logistic(SimSpec(a.n, a.d, a.seed, a.missing_fraction))
    write_csv(ds, sys.stdout if a.out in (None, "-") else a.out)
    _write_meta(a.out, {"beta": beta, "u": u, "seed": a.seed})
    return EXIT_OK


def cmd_fit(a):
    opts = _fit_options(a)
    ds = read_csv(a.data, a.label, a.group)
    t0 = time.perf_counter()
    model, raw = fit_model(ds, opts)
    secs = time.perf_counter() - t0
    model.save(a.out)
    _write_meta(a.out, {"seconds": secs})
    if opts.engine == "vb":
        print(f"lower bound {model.meta['lower_bound']:.10g} after {model.meta['n_iter']} iterations", file=sys.stderr)
        if not model.meta["converged"]:
            print("warning: fit did not converge", file=sys.stderr)
    else:
        print(f"ESS min {model.meta.get('ess_min', float('nan')):.1f} median {model.meta.get('ess_median', float('nan')):.1f}", file=sys.stderr)
        if a.chain_out:
            write_chain(raw, a.chain_out)
    return EXIT_OK


def _read_features(path, columns, label, group):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if r]
    skip = {label, group} - {None}
    present = [h for h in header if h not in skip]
    if present != list(columns):
        raise DataError(f"predictor columns {present} do not match the model's {list(columns)}")
    idx = [header.index(c) for c in columns]
    gi = header.index(group) if group in header else None
    D = np.empty((len(rows), len(idx)))
    groups = []
    for r_no, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{r_no}: expected {len(header)} fields, got {len(row)}")
        for k, j in enumerate(idx):
            cell = row[j].strip()
            try:
                D[r_no - 2, k] = np.nan if cell in MISSING_TOKENS else float(cell)
            except ValueError:
                raise DataError(f"{path}:{r_no}: non-numeric value {cell!r}") from None
        if gi is not None:
            groups.append(row[gi].strip())
    return D, (np.array(groups) if gi is not None else None)


def cmd_predict(a):
    model = FittedModel.load(a.model, a.variant)
    group = a.group
    if model.group_levels is not None and group is None:
        raise DataError("this random-intercept model needs --group")
    D, groups = _read_features(a.data, model.columns, a.label, group)
    C = model.design_rows(D, None, groups)
    score = C @ model.coef
    pred = np.where(score >= 0, 1, -1)
    with _open_out(a.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y_pred", "score"] if a.scores else ["y_pred"])
        for k in range(pred.shape[0]):
            w.writerow([int(pred[k]), format(float(score[k]), ".17g")] if a.scores else [int(pred[k])])
    return EXIT_OK


def _reps(a):
    reps = a.reps if a.reps is not None else PROFILES[a.profile]
    if reps < 1:
        raise ValueError("--reps must be at least 1")
    return reps


def cmd_evaluate(a):
    opts = _fit_options(a)
    ds = read_csv(a.data, a.label, a.group)
    rep = repeated_holdout(ds, opts, _reps(a), a.train_fraction, a.seed, a.jobs, a.observed_test)
    with _open_out(a.out) as fh:
        fh.write(format_report({opts.engine: rep}))
    _write_meta(a.out, {"seconds": rep.seconds})
    print(f"mean BER {rep.mean_ber:.6f} over {rep.reps} replicates", file=sys.stderr)
    return EXIT_OK


def _read_baseline(path, n):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path} is empty")
    body = rows[1:]
    try:
        labels = to_pm_labels([float(r[0]) for r in body])
    except ValueError:
        raise DataError(f"{path}: baseline labels must be numeric") from None
    if labels.shape[0] != n:
        raise DataError(f"{path}: {labels.shape[0]} baseline labels for {n} data rows")
    return labels


def cmd_compare(a):
    base = _fit_options(a)
    engines = [e.strip() for e in a.engines.split(",") if e.strip()]
    for e in engines:
        if e not in ENGINES:
            raise ValueError(f"unknown engine {e!r}")
    options = {e: FitOptions(base.variant, e, base.alpha, base.rho, base.prior, base.gibbs, base.standardize) for e in engines}
    ds = read_csv(a.data, a.label, a.group)
    baseline = _read_baseline(a.baseline_pred, ds.n) if a.baseline_pred else None
    reports, _ = compare(ds, options, _reps(a), a.train_fraction, a.seed, a.jobs, baseline, a.observed_test)
    with _open_out(a.out) as fh:
        fh.write(format_report(reports))
    _write_meta(a.out, {k: {"seconds": r.seconds} for k, r in reports.items()})
    for k, r in reports.items():
        print(f"{k}: mean BER {r.mean_ber:.6f}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    level = logging.WARNING - 10 * min(a.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    warnings.simplefilter("default")
    try:
        return COMMANDS[a.command](a)
    except (DataError, OSError, json.JSONDecodeError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
