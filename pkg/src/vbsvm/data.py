"""Datasets, design matrices, standardization and hold-out splits."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError

MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan", "?"})


def to_pm_labels(y):
    """Map labels given as {0, 1} or {-1, +1} onto {-1, +1}."""
    y = np.asarray(y, dtype=float).ravel()
    values = set(np.unique(y).tolist())
    if values <= {-1.0, 1.0}:
        return y.copy()
    if values <= {0.0, 1.0}:
        return 2.0 * y - 1.0
    raise DataError(f"labels must be in {{-1, +1}} or {{0, 1}}, found {sorted(values)}")


@dataclass(frozen=True)
class LabeledDataset:
    """Responses in {-1, +1}, an n x d predictor matrix, optional groups and
    an optional observation mask (1 = observed).

    Masked cells of ``D`` are overwritten with NaN so they cannot leak into a
    computation that forgets to consult the mask.
    """

    y: np.ndarray
    D: np.ndarray
    groups: np.ndarray | None = None
    mask: np.ndarray | None = None
    columns: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if not np.all((y == 1.0) | (y == -1.0)):
            raise DataError("every label must be exactly -1 or +1")
        D = np.array(self.D, dtype=float, copy=True)
        if D.ndim == 1:
            D = D[:, None]
        if D.shape[0] != y.shape[0]:
            raise DataError(f"{y.shape[0]} labels but {D.shape[0]} predictor rows")
        mask = self.mask
        if mask is not None:
            mask = np.asarray(mask)
            if mask.shape != D.shape or not np.all((mask == 0) | (mask == 1)):
                raise DataError("mask must be a 0/1 matrix with the shape of D")
            mask = mask.astype(np.int8)
            D[mask == 0] = np.nan
            if mask.all():
                mask = None
        if mask is None and np.isnan(D).any():
            raise DataError("predictor matrix has NaN cells but no mask")
        groups = self.groups
        if groups is not None:
            groups = np.asarray(groups)
            if groups.shape != y.shape:
                raise DataError("groups must have one entry per row")
        columns = tuple(self.columns) or tuple(f"x{j + 1}" for j in range(D.shape[1]))
        if len(columns) != D.shape[1]:
            raise DataError("column names do not match the number of predictors")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "columns", columns)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def d(self):
        return self.D.shape[1]

    @property
    def has_missing(self):
        return self.mask is not None

    def observed_mask(self):
        return np.ones(self.D.shape, dtype=np.int8) if self.mask is None else self.mask

    def subset(self, rows):
        rows = np.asarray(rows)
        return LabeledDataset(
            y=self.y[rows],
            D=self.D[rows],
            groups=None if self.groups is None else self.groups[rows],
            mask=None if self.mask is None else self.mask[rows],
            columns=self.columns,
        )

    def with_predictors(self, D):
        return LabeledDataset(self.y, D, self.groups, self.mask, self.columns)

    def complete_cases(self):
        if self.mask is None:
            return self
        return self.subset(np.flatnonzero(self.mask.all(axis=1)))


@dataclass(frozen=True)
class DesignPair:
    """Fixed-effects matrix X (n x p) and random-effects matrix Z (n x m)."""

    X: np.ndarray
    Z: np.ndarray
    kind: str = "custom"
    group_levels: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(len(self.X), -1)
        Z = np.asarray(self.Z, dtype=float).reshape(len(self.Z), -1)
        if X.shape[0] != Z.shape[0]:
            raise DataError("X and Z must have the same number of rows")
        if X.shape[1] + Z.shape[1] < 1:
            raise DataError("design needs at least one column")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.Z.shape[1]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def C(self):
        return np.hstack([self.X, self.Z])


def _require_complete(ds, what):
    if ds.has_missing:
        cells = int((ds.mask == 0).sum())
        raise DataError(f"{what} needs fully observed predictors; {cells} missing cells found")


def build_penalty_design(ds):
    """X = 1_n (unpenalized intercept), Z = D.

    The random-effect variance then plays the role sigma_u^2 = 1 / (4 alpha).
    """
    if ds.n == 0:
        raise DataError("empty dataset")
    if ds.d == 0:
        raise DataError("penalty design needs at least one predictor")
    _require_complete(ds, "penalty design")
    return DesignPair(np.ones((ds.n, 1)), ds.D.copy(), kind="penalty")


def group_indicator_matrix(groups, levels=None):
    """Indicator columns ordered by first appearance of each group label."""
    groups = np.asarray(groups)
    if levels is None:
        _, first = np.unique(groups, return_index=True)
        levels = tuple(groups[np.sort(first)].tolist())
    index = {g: k for k, g in enumerate(levels)}
    Z = np.zeros((groups.shape[0], len(levels)))
    for i, g in enumerate(groups.tolist()):
        k = index.get(g)
        if k is not None:
            Z[i, k] = 1.0
    return Z, tuple(levels)


def build_random_intercept_design(ds, levels=None):
    """X = [1, D] rows, Z = group indicators (one column per group)."""
    if ds.groups is None:
        raise DataError("random-intercept design needs group labels")
    if ds.n == 0:
        raise DataError("empty dataset")
    _require_complete(ds, "random-intercept design")
    Z, levels = group_indicator_matrix(ds.groups, levels)
    empty = np.flatnonzero(Z.sum(axis=0) == 0)
    if empty.size:
        raise DataError(f"group(s) {[levels[k] for k in empty]} have no rows")
    X = np.hstack([np.ones((ds.n, 1)), ds.D])
    return DesignPair(X, Z, kind="random_intercept", group_levels=levels)


@dataclass(frozen=True)
class StandardizeTransform:
    center: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if np.any(~(np.asarray(self.scale) > 0)):
            raise DataError("standardization scales must be positive")

    def apply(self, D):
        return (np.asarray(D, dtype=float) - self.center) / self.scale

    def invert(self, D):
        return np.asarray(D, dtype=float) * self.scale + self.center

    @classmethod
    def identity(cls, d):
        return cls(np.zeros(d), np.ones(d))


def standardize(D, mask=None, columns=None):
    """Center and scale each column to mean 0 / sample SD 1 over its observed
    entries. Returns the standardized matrix and the reusable transform."""
    D = np.asarray(D, dtype=float)
    obs = np.ones(D.shape, dtype=bool) if mask is None else np.asarray(mask).astype(bool)
    d = D.shape[1]
    center = np.empty(d)
    scale = np.empty(d)
    for j in range(d):
        col = D[obs[:, j], j]
        name = columns[j] if columns else f"column {j}"
        if col.size < 2:
            raise DataError(f"{name} has fewer than two observed values")
        center[j] = col.mean()
        scale[j] = col.std(ddof=1)
        # a constant column can still show a rounding-level SD
        if np.ptp(col) == 0 or not scale[j] > 0:
            raise DataError(f"{name} has zero variance")
    tr = StandardizeTransform(center, scale)
    out = tr.apply(D)
    out[~obs] = np.nan
    return out, tr


def split_holdout(ds, train_fraction, rng, observed_test=False, max_tries=100):
    """Random train/test partition of the rows.

    ``observed_test`` restricts test rows to fully observed ones. A split that
    leaves a class absent from the training rows is redrawn up to ``max_tries``
    times.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = ds.n
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    n_test = n - n_train
    eligible = np.arange(n)
    if observed_test and ds.has_missing:
        eligible = np.flatnonzero(ds.mask.all(axis=1))
        if eligible.size < n_test:
            raise DataError(f"only {eligible.size} fully observed rows for {n_test} test rows")
    for _ in range(max_tries):
        test = np.sort(rng.choice(eligible, size=n_test, replace=False))
        train = np.setdiff1d(np.arange(n), test)
        if np.unique(ds.y[train]).size == 2:
            return train, test
    raise DataError(f"could not draw a split with both classes in training after {max_tries} tries")


def read_csv(path, label="y", group=None):
    """Read a header CSV: one label column, an optional group column, and
    numeric predictors. Empty cells (or NA/NaN/?) are missing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if r]
    header = [h.strip() for h in header]
    if label not in header:
        raise DataError(f"label column {label!r} not found in {path}")
    if group is not None and group not in header:
        raise DataError(f"group column {group!r} not found in {path}")
    li = header.index(label)
    gi = header.index(group) if group is not None else None
    pred_idx = [j for j in range(len(header)) if j != li and j != gi]
    y, D, mask, groups = [], [], [], []
    for r_no, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{r_no}: expected {len(header)} fields, got {len(row)}")
        lab = row[li].strip()
        if lab in MISSING_TOKENS:
            raise DataError(f"{path}:{r_no}: missing label")
        try:
            y.append(float(lab))
        except ValueError:
            raise DataError(f"{path}:{r_no}: non-numeric label {lab!r}") from None
        if gi is not None:
            groups.append(row[gi].strip())
        vals, obs = [], []
        for j in pred_idx:
            cell = row[j].strip()
            if cell in MISSING_TOKENS:
                vals.append(np.nan)
                obs.append(0)
            else:
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{r_no}: non-numeric value {cell!r} in {header[j]!r}") from None
                obs.append(1)
        D.append(vals)
        mask.append(obs)
    D = np.array(D, dtype=float).reshape(len(rows), len(pred_idx))
    mask = np.array(mask, dtype=np.int8).reshape(D.shape)
    return LabeledDataset(
        y=to_pm_labels(y),
        D=D,
        groups=np.array(groups) if gi is not None else None,
        mask=None if mask.all() else mask,
        columns=tuple(header[j] for j in pred_idx),
    )


def format_float(x):
    return format(float(x), ".17g")


def write_csv(ds, path, label="y", group="group"):
    """Write ``ds`` to a path or an open text handle; missing cells are empty."""
    if hasattr(path, "write"):
        _write_rows(ds, path, label, group)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(ds, fh, label, group)


def _write_rows(ds, fh, label, group):
    header = [label] + ([group] if ds.groups is not None else []) + list(ds.columns)
    obs = ds.observed_mask()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for i in range(ds.n):
        row = [str(int(ds.y[i]))]
        if ds.groups is not None:
            row.append(str(ds.groups[i]))
        row += [format_float(v) if obs[i, j] else "" for j, v in enumerate(ds.D[i])]
        w.writerow(row)
