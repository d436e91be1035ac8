import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elss.baselines import (Baseline, alignment, chi2_divergence, eerf_scores, eerf_select,
                            lkrf_select, lkrf_weights, project_simplex, rks_select)
from elss.errors import ArgumentError
from elss.features import sample_pool
from elss.leverage import SelectionMode

cp = pytest.importorskip("cvxpy")


def _raw(m0=25, n=80, seed=0):
    rng = np.random.default_rng(seed)
    pool = sample_pool(m0, 3, 1.5, seed)
    X = rng.normal(size=(n, 3))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=n)
    return pool.evaluate(X).T, y


def test_rks_select_without_replacement():
    pool = sample_pool(30, 2, 1.0, seed=0)
    fs = rks_select(pool, 30, seed=4)
    assert sorted(fs.indices) == list(range(30))
    assert fs.mode is SelectionMode.RANDOM_UNIFORM
    np.testing.assert_allclose(fs.scales, 1 / np.sqrt(30))
    np.testing.assert_array_equal(rks_select(pool, 5, 1).indices, rks_select(pool, 5, 1).indices)
    with pytest.raises(ArgumentError):
        rks_select(pool, 31, 0)


def test_eerf_against_loop():
    P, y = _raw()
    loop = np.array([abs(sum(y[n] * P[j, n] for n in range(P.shape[1]))) / P.shape[1]
                     for j in range(P.shape[0])])
    np.testing.assert_allclose(eerf_scores(P, y), loop, atol=1e-14)
    fs = eerf_select(P, y, 4)
    np.testing.assert_array_equal(fs.indices, np.argsort(-loop, kind="stable")[:4])


def _simplex_oracle(v):
    q = cp.Variable(v.size)
    cp.Problem(cp.Minimize(cp.sum_squares(q - v)), [q >= 0, cp.sum(q) == 1]).solve()
    return q.value


@given(arrays(float, st.integers(1, 8), elements=st.floats(-5, 5)))
def test_project_simplex_properties(v):
    q = project_simplex(v)
    assert np.all(q >= 0) and abs(q.sum() - 1) < 1e-12
    # optimality: v - q is constant on the support and no larger off it
    r = v - q
    sup = q > 0
    assert np.ptp(r[sup]) < 1e-9
    if (~sup).any():
        assert r[~sup].max() <= r[sup].min() + 1e-9


def test_project_simplex_oracle(rng):
    v = rng.normal(size=10)
    np.testing.assert_allclose(project_simplex(v), _simplex_oracle(v), atol=1e-6)


def _lkrf_oracle(s, rho):
    m0 = s.size
    q = cp.Variable(m0)
    cons = [q >= 0, cp.sum(q) == 1, cp.sum_squares(m0 * q - 1) / m0 <= rho]
    cp.Problem(cp.Maximize(s @ q), cons).solve(solver=cp.CLARABEL)
    return q.value


@pytest.mark.parametrize("rho", [0.05, 0.5, 3.0])
def test_lkrf_matches_convex_solver(rho):
    P, y = _raw(seed=3)
    s = alignment(P, y) ** 2
    q = lkrf_weights(P, y, rho)
    ref = _lkrf_oracle(s, rho)
    assert chi2_divergence(q) <= rho * (1 + 1e-9)
    assert s @ q == pytest.approx(s @ ref, rel=1e-6)
    np.testing.assert_allclose(q, ref, atol=1e-4)


def test_lkrf_limits():
    P, y = _raw(seed=2)
    s = alignment(P, y) ** 2
    q = lkrf_weights(P, y, 1e6)
    assert q[np.argmax(s)] == pytest.approx(1.0)
    np.testing.assert_allclose(lkrf_weights(np.ones((4, 5)), np.ones(5), 1.0), 0.25)
    small = lkrf_select(P, y, 5, 1e-4)
    np.testing.assert_array_equal(small.indices, eerf_select(P, y, 5).indices)


def test_lkrf_sampled_selection():
    P, y = _raw(seed=1)
    fs = lkrf_select(P, y, 6, 1.0, sample=True, seed=0)
    assert fs.mode is SelectionMode.SAMPLED_WEIGHTED and fs.m == 6


def test_baseline_params():
    assert Baseline("LKRF", {"rho": 2.0}).kind.value == "LKRF"
    with pytest.raises(ArgumentError):
        Baseline("RKS", {"rho": 1.0})
    with pytest.raises(ArgumentError):
        Baseline("LKRF", {"rho": -1.0})
