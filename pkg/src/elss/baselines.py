"""Comparison selectors: plain random features (RKS) and two supervised ones.

EERF ranks pool features by the absolute empirical correlation
``|(1/N) sum_n y_n phi(x_n, w_j)|`` and keeps the top M.

LKRF solves the kernel-alignment problem

    maximize    sum_j q_j s_j,        s_j = ((1/N) sum_n y_n phi(x_n, w_j))^2
    subject to  q in simplex,  sum_j (M0 q_j - 1)^2 / M0 <= rho.

For a multiplier ``t >= 0`` the maximizer of the Lagrangian is the
Euclidean projection of ``1/M0 + t s`` onto the simplex; the divergence of
that point grows monotonically with ``t``, so ``t`` is found by bisection
until the divergence constraint is tight.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConvergenceError, ShapeError
from .features import FeaturePool
from .leverage import SelectionMode, WeightedFeatureSet, resample_weighted, top_m_indices


class BaselineKind(str, enum.Enum):
    RKS = "RKS"
    EERF = "EERF"
    LKRF = "LKRF"


@dataclass(frozen=True)
class Baseline:
    kind: BaselineKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = BaselineKind(self.kind)
        allowed = {"rho"} if kind is BaselineKind.LKRF else set()
        extra = set(self.params) - allowed
        if extra:
            raise ArgumentError(f"{kind.value} takes no parameters {sorted(extra)}")
        if kind is BaselineKind.LKRF and not self.params.get("rho", 1.0) > 0:
            raise ArgumentError("LKRF needs rho > 0")
        object.__setattr__(self, "kind", kind)


def _uniform_set(idx):
    m = len(idx)
    return np.full(m, 1.0 / np.sqrt(m))


def rks_select(pool: FeaturePool, m: int, seed) -> WeightedFeatureSet:
    """`m` pool features drawn uniformly without replacement."""
    if not 1 <= m <= pool.size:
        raise ArgumentError(f"m must be in [1, {pool.size}], got {m}")
    idx = np.random.default_rng(seed).choice(pool.size, size=m, replace=False)
    return WeightedFeatureSet(idx, _uniform_set(idx), SelectionMode.RANDOM_UNIFORM)


def _check_raw(phi_raw, y):
    P = np.asarray(phi_raw, dtype=float)
    y = np.asarray(y, dtype=float)
    if P.ndim != 2 or y.shape != (P.shape[1],):
        raise ShapeError(f"phi_raw {P.shape} and targets {y.shape} are incompatible")
    return P, y


def alignment(phi_raw, y) -> np.ndarray:
    """``(1/N) sum_n y_n phi(x_n, w_j)`` for each pool feature ``j``."""
    P, y = _check_raw(phi_raw, y)
    return P @ y / P.shape[1]


def eerf_scores(phi_raw, y) -> np.ndarray:
    return np.abs(alignment(phi_raw, y))


def eerf_select(phi_raw, y, m: int) -> WeightedFeatureSet:
    idx = top_m_indices(eerf_scores(phi_raw, y), m)
    return WeightedFeatureSet(idx, _uniform_set(idx), SelectionMode.TOP_M_UNIFORM)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def chi2_divergence(q) -> float:
    """``sum_j (M0 q_j - 1)^2 / M0``, the divergence from the uniform distribution."""
    q = np.asarray(q, dtype=float)
    m0 = q.size
    return float(np.sum((m0 * q - 1.0) ** 2) / m0)


def lkrf_weights(phi_raw, y, rho: float, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Alignment-maximizing distribution inside a chi-square ball of radius `rho`."""
    if not rho > 0:
        raise ArgumentError(f"rho must be positive, got {rho}")
    s = alignment(phi_raw, y) ** 2
    m0 = s.size
    uniform = np.full(m0, 1.0 / m0)
    if not np.all(np.isfinite(s)):
        raise ConvergenceError("alignment scores are not finite")
    if np.ptp(s) == 0:
        return uniform

    # the unconstrained optimum: uniform mass on the argmax set
    top = s == s.max()
    q_inf = np.where(top, 1.0 / top.sum(), 0.0)
    if chi2_divergence(q_inf) <= rho:
        return q_inf

    def q_at(t):
        return project_simplex(uniform + t * s)

    lo, hi = 0.0, 1.0 / np.ptp(s)
    for _ in range(200):
        if chi2_divergence(q_at(hi)) >= rho:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError("could not bracket the divergence constraint")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if chi2_divergence(q_at(mid)) > rho:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    q = q_at(lo)
    return q / q.sum()


def lkrf_select(phi_raw, y, m: int, rho: float, sample: bool = False, seed=None):
    """Top-`m` features by LKRF weight, or `m` i.i.d. draws from it when `sample`."""
    q = lkrf_weights(phi_raw, y, rho)
    if sample:
        return resample_weighted(q, m, seed)
    idx = top_m_indices(q, m)
    return WeightedFeatureSet(idx, _uniform_set(idx), SelectionMode.TOP_M_UNIFORM)
