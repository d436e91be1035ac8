"""Empirical leverage weights over a feature pool and feature selection from them.

Given the scaled feature matrix ``Phi`` (M0 x N0) and ``A = Phi Phi^T`` with
eigendecomposition ``A = U diag(s) U^T``, the ridge leverage matrix is
``Q = A (A + lam I)^{-1} = U diag(s / (s + lam)) U^T`` and the weights are
``q_i = Q_ii / Tr Q``. With ``lam = 0`` and full-rank ``A``, ``Q = I`` and
the weights are uniform, i.e. plain random Fourier features.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ArgumentError, DegenerateError, ShapeError
from .features import FeatureMatrix, FeaturePool


class SelectionMode(str, enum.Enum):
    SAMPLED_WEIGHTED = "sampled_weighted"
    TOP_M_UNIFORM = "top_m_uniform"
    RANDOM_UNIFORM = "random_uniform"


@dataclass(frozen=True)
class LeverageWeights:
    weights: np.ndarray
    lam: float
    pool_id: str | None = None

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class WeightedFeatureSet:
    """M selected pool indices and the per-feature scale applied to each."""

    indices: np.ndarray
    scales: np.ndarray
    mode: SelectionMode

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64)
        sc = np.array(self.scales, dtype=float)
        if idx.ndim != 1 or sc.shape != idx.shape:
            raise ShapeError("indices and scales must be 1-D of equal length")
        if np.any(sc <= 0) or not np.all(np.isfinite(sc)):
            raise ArgumentError("scales must be positive and finite")
        idx.setflags(write=False)
        sc.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scales", sc)
        object.__setattr__(self, "mode", SelectionMode(self.mode))

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    def to_dict(self) -> dict:
        return {"indices": self.indices.tolist(), "scales": self.scales.tolist(),
                "mode": self.mode.value}

    @classmethod
    def from_dict(cls, obj: dict) -> "WeightedFeatureSet":
        return cls(obj["indices"], obj["scales"], obj["mode"])


def rank_tolerance(eigenvalues, size=None) -> float:
    """Eigenvalues at or below ``size * eps * s_max`` count as zero."""
    s = np.asarray(eigenvalues, dtype=float)
    size = s.shape[0] if size is None else size
    smax = float(s.max()) if s.size else 0.0
    return size * np.finfo(float).eps * max(smax, 0.0)


def psd_eigh(A):
    """Eigendecomposition of a symmetric PSD matrix with the rank floor applied.

    Returns eigenvalues in descending order (clipped to zero below the rank
    tolerance) and the matching eigenvectors as columns.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    s, U = np.linalg.eigh(0.5 * (A + A.T))
    s, U = s[::-1], U[:, ::-1]
    tol = rank_tolerance(s, A.shape[0])
    s = np.where(s > tol, s, 0.0)
    return s, U


def shrinkage_ratios(s, lam: float) -> np.ndarray:
    """``s / (s + lam)`` with zero eigenvalues mapped to zero (also at lam = 0)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] / (s[pos] + lam)
    return out


def ridge_leverage_diagonal(A, lam: float):
    """Diagonal and trace of ``A (A + lam I)^{-1}`` via the eigendecomposition."""
    if lam < 0:
        raise ArgumentError(f"lambda must be non-negative, got {lam}")
    s, U = psd_eigh(A)
    r = shrinkage_ratios(s, lam)
    return (U * U) @ r, float(r.sum())


def leverage_distribution(A, lam: float) -> np.ndarray:
    """Normalized ridge leverage scores of a PSD matrix ``A``."""
    diag, trace = ridge_leverage_diagonal(A, lam)
    if not trace > 0:
        raise DegenerateError("Tr[Q] = 0: the feature Gram matrix has no usable spectrum")
    q = np.clip(diag, 0.0, None) / trace
    return q / q.sum()


def leverage_distribution_direct(A, lam: float) -> np.ndarray:
    """Same quantity through a linear solve ``(A + lam I) Y = A``; for cross-checks."""
    A = np.asarray(A, dtype=float)
    if lam < 0:
        raise ArgumentError(f"lambda must be non-negative, got {lam}")
    n = A.shape[0]
    Y = scipy.linalg.solve(A + lam * np.eye(n), A, assume_a="sym")
    d = np.diag(Y)
    return d / d.sum()


def compute_leverage_weights(phi: FeatureMatrix, lam: float) -> LeverageWeights:
    """Empirical leverage weights ``q_i = Q_ii / Tr Q`` for every pool feature."""
    values = phi.values if isinstance(phi, FeatureMatrix) else np.asarray(phi, float)
    if not np.any(values):
        raise DegenerateError("feature matrix is identically zero")
    A = values @ values.T
    q = leverage_distribution(A, lam)
    return LeverageWeights(q, float(lam), getattr(phi, "pool_id", None))


def _weights_array(weights) -> np.ndarray:
    w = weights.weights if isinstance(weights, LeverageWeights) else np.asarray(weights, float)
    if w.ndim != 1 or w.size == 0:
        raise ArgumentError("weights must be a non-empty 1-D vector")
    return w


def resample_weighted(weights, m: int, seed) -> WeightedFeatureSet:
    """Draw `m` features i.i.d. (with replacement) from the weight distribution.

    Each draw gets scale ``1 / sqrt(m * M0 * q_i)`` so that the Gram matrix of
    the transformed features is an unbiased estimate of the full-pool one.
    """
    q = _weights_array(weights)
    m0 = q.shape[0]
    if not 1 <= m <= m0:
        raise ArgumentError(f"m must be in [1, {m0}], got {m}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(m0, size=m, replace=True, p=q)
    scales = 1.0 / np.sqrt(m * m0 * q[idx])
    return WeightedFeatureSet(idx, scales, SelectionMode.SAMPLED_WEIGHTED)


def top_m_indices(values, m: int) -> np.ndarray:
    """Indices of the `m` largest entries, ties broken toward the lower index."""
    v = np.asarray(values, dtype=float)
    if not 1 <= m <= v.shape[0]:
        raise ArgumentError(f"m must be in [1, {v.shape[0]}], got {m}")
    return np.argsort(-v, kind="stable")[:m]


def select_top_m(weights, m: int) -> WeightedFeatureSet:
    """Deterministically keep the `m` heaviest features, each scaled by ``1/sqrt(m)``."""
    q = _weights_array(weights)
    idx = top_m_indices(q, m)
    return WeightedFeatureSet(idx, np.full(m, 1.0 / np.sqrt(m)), SelectionMode.TOP_M_UNIFORM)


def transform(X, pool: FeaturePool, fset: WeightedFeatureSet) -> np.ndarray:
    """Design matrix ``Z[n, j] = scale_j * phi(x_n, omega_{index_j})``, shape (N, M)."""
    return pool.evaluate(X, fset.indices) * fset.scales


def weights_to_csv(weights, path) -> None:
    """Write ``index,weight`` rows for external histogram plotting."""
    q = _weights_array(weights)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,weight\n")
        for i, w in enumerate(q):
            fh.write(f"{i},{float(w)!r}\n")
