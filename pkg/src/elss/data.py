"""Dataset containers, file loaders, standardization and synthetic data."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DegenerateError, LabelError, ParseError


class Task(str, enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"

    @classmethod
    def parse(cls, value) -> "Task":
        if isinstance(value, Task):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ArgumentError(f"unknown task kind {value!r}") from None


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Inputs of shape (N, d), targets of shape (N,), and the task kind.

    Arrays are copied and made read-only on construction. Classification
    targets are always stored in {-1, +1}.
    """

    inputs: np.ndarray
    targets: np.ndarray
    task: Task
    name: str = ""

    def __post_init__(self):
        X = _frozen(self.inputs)
        y = _frozen(self.targets)
        if X.ndim != 2:
            raise ArgumentError(f"inputs must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ArgumentError(
                f"targets shape {y.shape} does not match {X.shape[0]} rows")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ArgumentError("dataset needs N >= 1 and d >= 1")
        if not np.all(np.isfinite(X)):
            raise ArgumentError("inputs contain NaN or Inf")
        task = Task.parse(self.task)
        if task is Task.CLASSIFICATION and not np.all(np.isin(y, (-1.0, 1.0))):
            raise LabelError("classification targets must lie in {-1, +1}")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "task", task)

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(self.inputs[index], self.targets[index], self.task, self.name)


@dataclass(frozen=True)
class StandardizationParams:
    feature_means: np.ndarray
    feature_stds: np.ndarray
    target_scale: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "feature_means", _frozen(self.feature_means))
        object.__setattr__(self, "feature_stds", _frozen(self.feature_stds))


def map_labels(values) -> np.ndarray:
    """Map {0, 1} or {-1, +1} labels to {-1, +1}.

    Raises
    ------
    LabelError
        If more than two distinct values occur, or the values are not a
        subset of one of the two accepted conventions.
    """
    y = np.asarray(values, dtype=float)
    uniq = set(np.unique(y).tolist())
    if len(uniq) > 2:
        raise LabelError(
            f"classification targets must be two-valued, found {len(uniq)} "
            f"distinct values")
    if uniq <= {0.0, 1.0}:
        return np.where(y > 0.5, 1.0, -1.0)
    if uniq <= {-1.0, 1.0}:
        return y.copy()
    raise LabelError(
        f"classification labels must be {{0,1}} or {{-1,+1}}, got {sorted(uniq)}")


def _parse_float(token, row, column):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", row=row, column=column) from None


def _looks_numeric(row) -> bool:
    try:
        for tok in row:
            float(tok)
    except ValueError:
        return False
    return True


def load_csv(path, target_column: int = -1, task=Task.REGRESSION, name=None) -> Dataset:
    """Load a comma-separated file with an optional header row.

    The header is detected by the first row containing a non-numeric
    cell. `target_column` may be negative (Python indexing). Rows and
    columns in error messages are 1-based.
    """
    path = Path(path)
    task = Task.parse(task)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: file contains no data rows")
    first_line = 1
    if not _looks_numeric(rows[0]):
        rows = rows[1:]
        first_line = 2
        if not rows:
            raise ParseError(f"{path}: file contains only a header")

    width = len(rows[0])
    if width < 2:
        raise ParseError(f"{path}: need at least one input and one target column",
                         row=first_line)
    tcol = target_column + width if target_column < 0 else target_column
    if not 0 <= tcol < width:
        raise ArgumentError(f"target_column {target_column} out of range for {width} columns")

    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        lineno = i + first_line
        if len(row) != width:
            raise ParseError(f"{path}: expected {width} columns, found {len(row)}",
                             row=lineno)
        for j, tok in enumerate(row):
            data[i, j] = _parse_float(tok.strip(), lineno, j + 1)

    y = data[:, tcol]
    X = np.delete(data, tcol, axis=1)
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        col = bad[1] + (1 if bad[1] >= tcol else 0) + 1
        raise ParseError(f"{path}: NaN or Inf in inputs", row=bad[0] + first_line, column=col)
    if task is Task.CLASSIFICATION:
        y = map_labels(y)
    return Dataset(X, y, task, name or path.stem)


def load_libsvm(path, task=Task.CLASSIFICATION, n_features=None, name=None) -> Dataset:
    """Load a sparse ``label idx:val ...`` file into a dense dataset.

    Indices are 1-based. The input dimension is the largest index seen,
    unless `n_features` is given (useful to pad a test file to the train
    file's width).
    """
    path = Path(path)
    task = Task.parse(task)
    labels, rows = [], []
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            labels.append(_parse_float(parts[0], lineno, 1))
            entries = {}
            for k, tok in enumerate(parts[1:], start=2):
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise ParseError(f"{path}: malformed entry {tok!r}", row=lineno, column=k)
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise ParseError(f"{path}: bad feature index {idx_s!r}",
                                     row=lineno, column=k) from None
                if idx < 1:
                    raise ParseError(f"{path}: feature index must be >= 1", row=lineno, column=k)
                entries[idx] = _parse_float(val_s, lineno, k)
                max_index = max(max_index, idx)
            rows.append(entries)
    if not rows:
        raise ParseError(f"{path}: file contains no data rows")

    d = max_index if n_features is None else int(n_features)
    if d < max_index:
        raise ParseError(f"{path}: feature index {max_index} exceeds n_features={d}")
    d = max(d, 1)
    X = np.zeros((len(rows), d))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    y = np.asarray(labels)
    if task is Task.CLASSIFICATION:
        y = map_labels(y)
    return Dataset(X, y, task, name or path.stem)


def load_dataset(path, task, target_column: int = -1, n_features=None) -> Dataset:
    """Dispatch on file extension: ``.csv`` is CSV, everything else libsvm."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path, target_column=target_column, task=task)
    return load_libsvm(path, task=task, n_features=n_features)


def standardize(ds: Dataset) -> tuple[Dataset, StandardizationParams]:
    """Zero-mean, unit-variance inputs; regression targets mapped onto [-1, 1].

    Uses the sample standard deviation (divisor N-1). Constant columns get
    a std of 1 and therefore map to zeros; a column counts as constant when
    its std is below ``1e-10`` times its largest magnitude, so that pure
    rounding noise is not blown up to unit variance.
    """
    X = ds.inputs
    means = X.mean(axis=0)
    if ds.n_samples > 1:
        stds = X.std(axis=0, ddof=1)
    else:
        stds = np.ones(ds.n_features)
    constant = stds <= 1e-10 * np.abs(X).max(axis=0)
    stds = np.where(constant, 1.0, stds)
    means = np.where(constant, X[0], means)

    scale = None
    if ds.task is Task.REGRESSION:
        lo, hi = float(ds.targets.min()), float(ds.targets.max())
        if not hi > lo:
            raise DegenerateError("all regression targets are equal; target scale undefined")
        scale = (lo, hi)
    params = StandardizationParams(means, stds, scale)
    return apply_standardization(ds, params), params


def apply_standardization(ds: Dataset, params: StandardizationParams) -> Dataset:
    """Apply train-set parameters to any dataset (test targets may leave [-1, 1])."""
    if ds.n_features != params.feature_means.shape[0]:
        raise ArgumentError(
            f"dataset has {ds.n_features} features, params expect "
            f"{params.feature_means.shape[0]}")
    X = (ds.inputs - params.feature_means) / params.feature_stds
    y = ds.targets
    if ds.task is Task.REGRESSION and params.target_scale is not None:
        lo, hi = params.target_scale
        y = 2.0 * (y - lo) / (hi - lo) - 1.0
    return Dataset(X, y, ds.task, ds.name)


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random disjoint split with ``round(test_fraction * N)`` test rows (halves round up)."""
    if not 0.0 < test_fraction < 1.0:
        raise ArgumentError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = ds.n_samples
    n_test = int(math.floor(test_fraction * n + 0.5))
    if n_test < 1 or n_test > n - 1:
        raise ArgumentError(
            f"split of N={n} with test_fraction={test_fraction} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.subset(train_idx), ds.subset(test_idx)


def _rkhs_target(X, anchors, alphas, bandwidth):
    sq = ((X[:, None, :] - anchors[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-sq / (2.0 * bandwidth ** 2)) @ alphas


def make_synthetic_rkhs(n, d, bandwidth, n_anchors, noise_std, seed,
                        *, anchors=None, alphas=None) -> Dataset:
    """Regression data whose noiseless target is a Gaussian-kernel expansion.

    ``x ~ N(0, I_d)`` and ``y = sum_j alpha_j exp(-|x - c_j|^2 / (2 bw^2))``
    plus Gaussian noise, affinely rescaled onto [-1, 1]. Anchors ``c_j`` are
    standard normal and coefficients ``alpha_j`` are standard normal unless
    given explicitly.
    """
    if n < 1 or d < 1 or n_anchors < 1:
        raise ArgumentError("n, d and n_anchors must be positive")
    if bandwidth <= 0:
        raise ArgumentError("bandwidth must be positive")
    if noise_std < 0:
        raise ArgumentError("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    c = rng.standard_normal((n_anchors, d)) if anchors is None else np.asarray(anchors, float)
    a = rng.standard_normal(n_anchors) if alphas is None else np.asarray(alphas, float)
    if c.shape != (n_anchors, d) or a.shape != (n_anchors,):
        raise ArgumentError("anchors/alphas do not match n_anchors and d")
    y = _rkhs_target(X, c, a, bandwidth) + noise_std * rng.standard_normal(n)
    lo, hi = y.min(), y.max()
    if hi > lo:
        y = 2.0 * (y - lo) / (hi - lo) - 1.0
    else:
        y = np.zeros_like(y)
    return Dataset(X, y, Task.REGRESSION, f"synthetic-rkhs-d{d}")
