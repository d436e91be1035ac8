"""Linear learners on transformed random features.

Ridge minimizes ``|Z theta - y|^2 + gamma |theta|^2`` in closed form.
Logistic regression minimizes
``(1/N) sum_n log(1 + exp(-y_n z_n . theta)) + gamma |theta|^2``
by gradient descent with Barzilai-Borwein trial steps and Armijo
backtracking, which keeps the objective monotone. Neither model has an
intercept: the random phases already allow constant shifts.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.special import expit

from .data import Dataset, Task
from .errors import (ArgumentError, NonConvergenceWarning, ShapeError,
                     SingularError, TaskMismatchError)
from .features import FeaturePool, sample_pool
from .leverage import WeightedFeatureSet, transform


def train_ridge(Z, y, gamma: float = 1e-6) -> np.ndarray:
    """Solve ``(Z^T Z + gamma I) theta = Z^T y``.

    Raises
    ------
    SingularError
        If ``gamma == 0`` and ``Z`` does not have full column rank.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 2 or y.shape != (Z.shape[0],):
        raise ShapeError(f"Z {Z.shape} and y {y.shape} are incompatible")
    if gamma < 0:
        raise ArgumentError(f"gamma must be non-negative, got {gamma}")
    m = Z.shape[1]
    if gamma == 0 and np.linalg.matrix_rank(Z) < m:
        raise SingularError("Z^T Z is singular and gamma = 0")
    H = Z.T @ Z + gamma * np.eye(m)
    rhs = Z.T @ y
    try:
        theta = scipy.linalg.solve(H, rhs, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise SingularError(f"ridge system is not positive definite: {exc}") from exc
    # one step of iterative refinement
    theta = theta + scipy.linalg.solve(H, rhs - H @ theta, assume_a="pos")
    return theta


def logistic_objective(theta, Z, y, gamma):
    margins = y * (Z @ theta)
    return float(np.mean(np.logaddexp(0.0, -margins)) + gamma * theta @ theta)


def logistic_gradient(theta, Z, y, gamma):
    margins = y * (Z @ theta)
    return -(Z.T @ (y * expit(-margins))) / Z.shape[0] + 2.0 * gamma * theta


@dataclass
class SolverInfo:
    converged: bool
    n_iter: int
    grad_norm: float
    objective: list = field(default_factory=list)


def train_logistic(Z, y, gamma: float = 1e-6, max_iter: int = 1000, tol: float = 1e-8,
                   theta0=None):
    """Regularized logistic regression.

    Returns
    -------
    theta : ndarray
    info : SolverInfo
        ``info.converged`` is False when `max_iter` was reached with the
        gradient norm still above `tol`; a :class:`NonConvergenceWarning`
        is emitted in that case as well. ``info.objective`` holds the
        objective after every iteration (non-increasing).
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 2 or y.shape != (Z.shape[0],):
        raise ShapeError(f"Z {Z.shape} and y {y.shape} are incompatible")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ArgumentError("logistic labels must be in {-1, +1}")
    if gamma < 0:
        raise ArgumentError(f"gamma must be non-negative, got {gamma}")

    n, m = Z.shape
    theta = np.zeros(m) if theta0 is None else np.array(theta0, dtype=float)
    lipschitz = np.linalg.norm(Z, 2) ** 2 / (4.0 * n) + 2.0 * gamma
    step = 1.0 / max(lipschitz, 1e-300)

    f = logistic_objective(theta, Z, y, gamma)
    g = logistic_gradient(theta, Z, y, gamma)
    history = [f]
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > tol and it < max_iter:
        t = step
        while True:
            cand = theta - t * g
            fc = logistic_objective(cand, Z, y, gamma)
            if fc <= f - 0.5 * t * gnorm ** 2 or t < 1e-20:
                break
            t *= 0.5
        if fc > f:
            # no decrease representable in floating point; stop here
            break
        g_new = logistic_gradient(cand, Z, y, gamma)
        s_vec, y_vec = cand - theta, g_new - g
        sy = float(s_vec @ y_vec)
        step = float(s_vec @ s_vec) / sy if sy > 0 else 1.0 / lipschitz
        theta, f, g = cand, fc, g_new
        gnorm = float(np.linalg.norm(g))
        history.append(f)
        it += 1

    info = SolverInfo(gnorm <= tol, it, gnorm, history)
    if not info.converged:
        warnings.warn(
            f"logistic regression stopped after {it} iterations with gradient norm {gnorm:.3e}",
            NonConvergenceWarning, stacklevel=2)
    return theta, info


@dataclass(frozen=True)
class TrainedModel:
    theta: np.ndarray
    feature_set: WeightedFeatureSet
    pool: FeaturePool
    task: Task
    ridge_gamma: float

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.shape != (self.feature_set.m,):
            raise ShapeError("theta length does not match the feature set")
        if not np.all(np.isfinite(theta)):
            raise ArgumentError("theta contains NaN or Inf")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "task", Task.parse(self.task))

    def decision_function(self, X) -> np.ndarray:
        return transform(X, self.pool, self.feature_set) @ self.theta

    def to_dict(self) -> dict:
        return {
            "format": "elss-model",
            "version": 1,
            "task": self.task.value,
            "ridge_gamma": self.ridge_gamma,
            "theta": self.theta.tolist(),
            "feature_set": self.feature_set.to_dict(),
            "pool": {"size": self.pool.size, "dim": self.pool.dim,
                     "bandwidth": self.pool.bandwidth, "seed": self.pool.seed,
                     "fingerprint": self.pool.fingerprint},
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path, pool: FeaturePool | None = None) -> "TrainedModel":
        """Load a saved model; the pool is regenerated from its seed when not given."""
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        meta = obj["pool"]
        if pool is None:
            if meta["seed"] is None:
                raise ArgumentError("model pool has no seed; pass the pool explicitly")
            pool = sample_pool(meta["size"], meta["dim"], meta["bandwidth"], meta["seed"])
        if pool.fingerprint != meta["fingerprint"]:
            raise ArgumentError("pool does not match the one the model was trained with")
        return cls(obj["theta"], WeightedFeatureSet.from_dict(obj["feature_set"]), pool,
                   obj["task"], obj["ridge_gamma"])


def fit_model(X, y, pool: FeaturePool, feature_set: WeightedFeatureSet, task,
              gamma: float = 1e-6, learner: str | None = None, max_iter: int = 1000,
              tol: float = 1e-8) -> TrainedModel:
    """Transform `X` with the selected features and train a linear learner.

    `learner` is ``"ridge"`` or ``"logistic"``; by default ridge for
    regression and logistic for classification. Ridge on a classification
    task fits the ±1 labels and predicts their sign.
    """
    task = Task.parse(task)
    if learner is None:
        learner = "ridge" if task is Task.REGRESSION else "logistic"
    if learner not in ("ridge", "logistic"):
        raise ArgumentError(f"unknown learner {learner!r}")
    if learner == "logistic" and task is Task.REGRESSION:
        raise TaskMismatchError("logistic regression needs a classification task")
    Z = transform(X, pool, feature_set)
    if learner == "ridge":
        theta = train_ridge(Z, y, gamma)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            theta, _ = train_logistic(Z, y, gamma, max_iter=max_iter, tol=tol)
    return TrainedModel(theta, feature_set, pool, task, gamma)


def predict(model: TrainedModel, X) -> np.ndarray:
    """Real-valued output for regression; labels in {-1, +1} (sign(0) = +1) otherwise."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.pool.dim:
        raise ShapeError(f"X shape {X.shape} does not match model input dimension {model.pool.dim}")
    out = model.decision_function(X)
    if model.task is Task.CLASSIFICATION:
        return np.where(out >= 0, 1.0, -1.0)
    return out


def error_rate(task, y_true, y_pred) -> float:
    """Misclassification fraction, or RMSE for regression."""
    task = Task.parse(task)
    y_true = np.asarray(y_true, float)
    y_pred = np.asarray(y_pred, float)
    if task is Task.CLASSIFICATION:
        return float(np.mean(y_true != y_pred))
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def evaluate(model: TrainedModel, ds: Dataset) -> float:
    if ds.task is not model.task:
        raise TaskMismatchError(f"model is {model.task.value}, dataset is {ds.task.value}")
    return error_rate(ds.task, ds.targets, predict(model, ds.inputs))
