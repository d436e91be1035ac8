import warnings

import numpy as np
import pytest
from scipy.optimize import minimize

from elss.data import Dataset, Task
from elss.errors import NonConvergenceWarning, SingularError, TaskMismatchError
from elss.features import sample_pool
from elss.learners import (TrainedModel, error_rate, evaluate, fit_model, logistic_gradient,
                           logistic_objective, predict, train_logistic, train_ridge)
from elss.leverage import SelectionMode, WeightedFeatureSet, select_top_m


def gd_ridge(Z, y, gamma, tol=1e-10, max_iter=200000):
    """Plain gradient descent on |Z t - y|^2 + gamma |t|^2 with step 1/L."""
    H = Z.T @ Z + gamma * np.eye(Z.shape[1])
    step = 1.0 / np.linalg.eigvalsh(H).max()
    theta = np.zeros(Z.shape[1])
    for _ in range(max_iter):
        g = H @ theta - Z.T @ y
        if np.linalg.norm(g) <= tol:
            break
        theta -= step * g
    return theta, np.linalg.norm(g)


def test_ridge_matches_gradient_descent(rng):
    Z = rng.normal(size=(50, 10))
    y = rng.normal(size=50)
    oracle, gnorm = gd_ridge(Z, y, 0.1)
    assert gnorm <= 1e-10
    np.testing.assert_allclose(train_ridge(Z, y, 0.1), oracle, atol=1e-8)


def test_ridge_zero_gamma_singular():
    Z = np.ones((5, 2))
    with pytest.raises(SingularError):
        train_ridge(Z, np.arange(5.0), 0.0)


def test_ridge_zero_gamma_full_rank(rng):
    Z = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    np.testing.assert_allclose(train_ridge(Z, y, 0.0), np.linalg.lstsq(Z, y, rcond=None)[0],
                               atol=1e-10)


def test_logistic_gradient_finite_differences(rng):
    Z = rng.normal(size=(40, 6))
    y = np.where(rng.normal(size=40) > 0, 1.0, -1.0)
    theta = rng.normal(size=6)
    g = logistic_gradient(theta, Z, y, 0.05)
    h = 1e-6
    fd = np.array([(logistic_objective(theta + h * e, Z, y, 0.05)
                    - logistic_objective(theta - h * e, Z, y, 0.05)) / (2 * h)
                   for e in np.eye(6)])
    np.testing.assert_allclose(g, fd, rtol=1e-5)


def test_logistic_matches_lbfgs(rng):
    Z = rng.normal(size=(80, 5))
    y = np.where(Z @ rng.normal(size=5) + 0.5 * rng.normal(size=80) > 0, 1.0, -1.0)
    theta, info = train_logistic(Z, y, 1e-2, max_iter=5000, tol=1e-10)
    assert info.converged
    ref = minimize(logistic_objective, np.zeros(5), args=(Z, y, 1e-2),
                   jac=logistic_gradient, method="L-BFGS-B",
                   options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 10000}).x
    np.testing.assert_allclose(theta, ref, atol=1e-6)
    assert np.all(np.diff(info.objective) <= 1e-15)


def test_logistic_non_convergence_warns(rng):
    Z = rng.normal(size=(30, 3))
    y = np.where(Z[:, 0] > 0, 1.0, -1.0)  # separable, gamma = 0: no minimizer
    with pytest.warns(NonConvergenceWarning):
        _, info = train_logistic(Z, y, 0.0, max_iter=20)
    assert not info.converged and info.n_iter <= 20


def _toy(task, n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = np.sin(X[:, 0]) if task is Task.REGRESSION else np.where(X[:, 0] > 0, 1.0, -1.0)
    return X, y


def test_fit_predict_regression():
    X, y = _toy(Task.REGRESSION)
    pool = sample_pool(40, 2, 1.0, seed=0)
    model = fit_model(X, y, pool, select_top_m(np.ones(40) / 40, 40), Task.REGRESSION, 1e-6)
    assert error_rate(Task.REGRESSION, y, predict(model, X)) < 0.1


def test_fit_predict_classification_both_learners():
    X, y = _toy(Task.CLASSIFICATION)
    pool = sample_pool(40, 2, 1.0, seed=0)
    fs = select_top_m(np.ones(40) / 40, 40)
    for learner in ("logistic", "ridge"):
        model = fit_model(X, y, pool, fs, Task.CLASSIFICATION, 1e-4, learner=learner)
        pred = predict(model, X)
        assert set(np.unique(pred)) <= {-1.0, 1.0}
        assert error_rate(Task.CLASSIFICATION, y, pred) < 0.1
    with pytest.raises(TaskMismatchError):
        fit_model(X, y, pool, fs, Task.REGRESSION, 1e-4, learner="logistic")


def test_sign_zero_is_positive():
    pool = sample_pool(2, 1, 1.0, seed=0)
    fs = WeightedFeatureSet([0, 1], [1.0, 1.0], SelectionMode.TOP_M_UNIFORM)
    model = TrainedModel(np.zeros(2), fs, pool, Task.CLASSIFICATION, 0.0)
    np.testing.assert_array_equal(predict(model, np.zeros((3, 1))), [1, 1, 1])


def test_error_rate_values():
    assert error_rate("classification", [1, -1, 1, 1], [1, 1, 1, -1]) == 0.5
    assert error_rate("regression", [0, 0], [3, 4]) == pytest.approx(np.sqrt(12.5))


def test_evaluate_task_mismatch():
    X, y = _toy(Task.REGRESSION)
    pool = sample_pool(5, 2, 1.0, seed=0)
    model = fit_model(X, y, pool, select_top_m(np.ones(5) / 5, 3), Task.REGRESSION)
    ds = Dataset(X, np.where(y > 0, 1.0, -1.0), Task.CLASSIFICATION)
    with pytest.raises(TaskMismatchError):
        evaluate(model, ds)


def test_model_round_trip(tmp_path):
    X, y = _toy(Task.CLASSIFICATION)
    pool = sample_pool(12, 2, 0.8, seed=5)
    model = fit_model(X, y, pool, select_top_m(np.arange(1, 13) / 78, 4), Task.CLASSIFICATION)
    path = tmp_path / "m.json"
    model.save(path)
    back = TrainedModel.load(path)
    np.testing.assert_array_equal(back.theta, model.theta)
    np.testing.assert_array_equal(predict(back, X), predict(model, X))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        TrainedModel.load(path, pool=pool)
