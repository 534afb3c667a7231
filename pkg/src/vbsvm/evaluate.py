"""Balanced error rate and the repeated hold-out protocol.

Replicate r draws its split and any sampler seed from the r-th stream spawned
from the master seed, so every model compared under the same seed sees the
same train/test rows.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import split_holdout
from .distributions import spawn_rngs
from .errors import DataError, NumericalError
from .model import fit_model

PROFILES = {"paper": 100, "ci": 20}


def ber(y_true, y_pred):
    """Mean of the two class-conditional error rates."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in length")
    pos, neg = y_true == 1, y_true == -1
    if not pos.any() or not neg.any():
        raise DataError("balanced error rate needs both classes in y_true")
    return 0.5 * (np.mean(y_pred[pos] != 1) + np.mean(y_pred[neg] != -1))


@dataclass
class EvalReport:
    bers: np.ndarray
    seconds: np.ndarray
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def reps(self):
        return self.bers.shape[0]

    @property
    def mean_ber(self):
        return float(np.mean(self.bers))

    def summary(self):
        q = np.quantile(self.bers, [0.0, 0.25, 0.5, 0.75, 1.0])
        return {"min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4], "mean": self.mean_ber}


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray
    seed: int


def replicate_splits(ds, reps, train_fraction, seed, observed_test=False):
    """Per-replicate (train, test, sampler seed), all derived from ``seed``."""
    out = []
    for rng in spawn_rngs(seed, reps):
        train, test = split_holdout(ds, train_fraction, rng, observed_test=observed_test)
        out.append(Split(train, test, int(rng.integers(2**63))))
    return out


def _one(args):
    ds, split, opts, r = args
    tr, te = ds.subset(split.train), ds.subset(split.test)
    t0 = time.perf_counter()
    try:
        model, _ = fit_model(tr, opts.with_seed(split.seed))
    except (DataError, NumericalError) as e:
        raise type(e)(f"replicate {r}: {e}") from e
    secs = time.perf_counter() - t0
    return ber(te.y, model.predict_dataset(te)), secs


def _run(tasks, jobs):
    if jobs <= 1:
        return [_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_one, tasks))


def repeated_holdout(ds, opts, reps=PROFILES["paper"], train_fraction=0.75, seed=0, jobs=1, observed_test=False):
    """Fit ``opts`` on ``reps`` random splits and report test BERs.

    Standardization is refit on each training split. Results are ordered by
    replicate index whatever ``jobs`` is.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    splits = replicate_splits(ds, reps, train_fraction, seed, observed_test)
    res = _run([(ds, s, opts, r) for r, s in enumerate(splits)], jobs)
    return EvalReport(np.array([b for b, _ in res]), np.array([t for _, t in res]), f"{opts.variant}/{opts.engine}")


def compare(ds, options, reps=PROFILES["paper"], train_fraction=0.75, seed=0, jobs=1, baseline=None, observed_test=False):
    """Paired comparison: every entry of ``options`` (label -> FitOptions)
    runs on the same splits. ``baseline`` is an optional vector of externally
    produced labels for every row of ``ds``; its BER is taken on each test set.
    """
    splits = replicate_splits(ds, reps, train_fraction, seed, observed_test)
    reports = {}
    for label, opts in options.items():
        res = _run([(ds, s, opts, r) for r, s in enumerate(splits)], jobs)
        reports[label] = EvalReport(np.array([b for b, _ in res]), np.array([t for _, t in res]), label)
    if baseline is not None:
        baseline = np.asarray(baseline)
        if baseline.shape != (ds.n,):
            raise DataError(f"baseline has {baseline.shape[0]} labels for {ds.n} rows")
        bers = [ber(ds.y[s.test], baseline[s.test]) for s in splits]
        reports["baseline"] = EvalReport(np.array(bers), np.zeros(reps), "baseline")
    return reports, splits


def format_report(reports):
    """Columnar text: replicate then one BER column per report."""
    labels = list(reports)
    reps = reports[labels[0]].reps
    lines = ["replicate " + " ".join(f"ber_{lab}" for lab in labels)]
    for r in range(reps):
        lines.append(f"{r} " + " ".join(format(float(reports[lab].bers[r]), ".17g") for lab in labels))
    lines.append("")
    lines.append("# summary " + " ".join(labels))
    for key in ("min", "q1", "median", "q3", "max", "mean"):
        lines.append(f"# {key} " + " ".join(format(float(reports[lab].summary()[key]), ".17g") for lab in labels))
    return "\n".join(lines) + "\n"
