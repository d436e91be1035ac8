"""Random Fourier feature pools for the Gaussian kernel.

A pool holds ``M0`` directions ``omega_m ~ N(0, I_d / sigma^2)`` and phases
``b_m ~ U[0, 2 pi)``; the feature map is ``phi(x, omega_m) = cos(x . omega_m + b_m)``.

With this map ``E[phi(x, w) phi(x', w)] = exp(-|x - x'|^2 / (2 sigma^2)) / 2``:
the cosine-with-phase features reproduce half the Gaussian kernel, which
keeps ``|phi| <= 1``. Leverage weights are unaffected by that constant
except through the effective value of the ridge parameter.

Randomness: numpy's PCG64 bit generator seeded with the integer ``seed``;
directions are drawn in one ``standard_normal((M0, d))`` call (ziggurat
transform of the uniform stream) and phases in one
``uniform(0, 2 pi, M0)`` call afterwards.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ArgumentError, ShapeError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class FeaturePool:
    """Immutable pool of random features.

    Attributes
    ----------
    directions : ndarray, shape (M0, d)
        Frequencies, already divided by the bandwidth.
    phases : ndarray, shape (M0,)
        Offsets in [0, 2 pi).
    bandwidth : float
        Gaussian kernel width sigma.
    seed : int or None
        Seed used by :func:`sample_pool`, if any.
    """

    directions: np.ndarray
    phases: np.ndarray
    bandwidth: float
    seed: int | None = None

    def __post_init__(self):
        W = np.array(self.directions, dtype=float)
        b = np.array(self.phases, dtype=float)
        if W.ndim != 2 or b.shape != (W.shape[0],):
            raise ShapeError(f"directions {W.shape} and phases {b.shape} disagree")
        if not self.bandwidth > 0:
            raise ArgumentError(f"bandwidth must be positive, got {self.bandwidth}")
        if np.any(b < 0) or np.any(b >= TWO_PI):
            raise ArgumentError("phases must lie in [0, 2 pi)")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "directions", W)
        object.__setattr__(self, "phases", b)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha1()
        h.update(self.directions.tobytes())
        h.update(self.phases.tobytes())
        h.update(np.float64(self.bandwidth).tobytes())
        return h.hexdigest()[:16]

    def evaluate(self, X, indices=None) -> np.ndarray:
        """Raw feature values ``phi(x_n, omega_m)`` as an (N, M) array.

        This is the single place the feature map is defined; other maps of
        the integral form can subclass the pool and override it.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ShapeError(f"inputs of shape {X.shape} do not match pool dimension {self.dim}")
        if indices is None:
            W, b = self.directions, self.phases
        else:
            idx = _check_indices(indices, self.size)
            W, b = self.directions[idx], self.phases[idx]
        return np.cos(X @ W.T + b)

    def with_bandwidth(self, bandwidth: float) -> "FeaturePool":
        """Same underlying draws, rescaled to another kernel width."""
        unit = self.directions * self.bandwidth
        return FeaturePool(unit / bandwidth, self.phases, bandwidth, self.seed)

    def to_dict(self) -> dict:
        return {
            "format": "elss-feature-pool",
            "version": 1,
            "bandwidth": self.bandwidth,
            "seed": self.seed,
            "directions": self.directions.tolist(),
            "phases": self.phases.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeaturePool":
        if obj.get("format") != "elss-feature-pool":
            raise ArgumentError("not a serialized feature pool")
        W = np.asarray(obj["directions"], dtype=float)
        if W.ndim == 1:
            W = W.reshape(len(obj["phases"]), -1)
        return cls(W, np.asarray(obj["phases"], float), obj["bandwidth"], obj.get("seed"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeaturePool":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class FeatureMatrix:
    """The (M, N) matrix with entries ``phi(x_n, omega_m) / sqrt(M N)``."""

    values: np.ndarray
    pool_id: str | None = None

    @property
    def m_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_points(self) -> int:
        return self.values.shape[1]

    def gram(self) -> np.ndarray:
        """``Phi Phi^T``, symmetrized against round-off."""
        A = self.values @ self.values.T
        return 0.5 * (A + A.T)


def _check_indices(indices, size):
    idx = np.asarray(indices)
    if idx.ndim != 1 or (idx.size and not np.issubdtype(idx.dtype, np.integer)):
        raise ArgumentError("feature indices must be a 1-D integer sequence")
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise IndexError(f"feature index out of range for pool of size {size}")
    return idx


def sample_pool(m0: int, d: int, bandwidth: float, seed: int) -> FeaturePool:
    """Draw ``m0`` i.i.d. features for a Gaussian kernel of width `bandwidth`."""
    if m0 < 1 or d < 1:
        raise ArgumentError(f"m0 and d must be positive, got m0={m0}, d={d}")
    if not bandwidth > 0:
        raise ArgumentError(f"bandwidth must be positive, got {bandwidth}")
    rng = np.random.default_rng(seed)
    unit = rng.standard_normal((m0, d))
    phases = np.mod(rng.uniform(0.0, TWO_PI, m0), TWO_PI)
    return FeaturePool(unit / bandwidth, phases, bandwidth, seed)


def eval_feature(x, pool: FeaturePool, m: int) -> float:
    """``cos(x . omega_m + b_m)`` for a single pool member."""
    if not 0 <= m < pool.size:
        raise IndexError(f"feature {m} out of range for pool of size {pool.size}")
    x = np.asarray(x, dtype=float)
    if x.shape != (pool.dim,):
        raise ShapeError(f"x has shape {x.shape}, expected ({pool.dim},)")
    return float(np.cos(x @ pool.directions[m] + pool.phases[m]))


def build_feature_matrix(X, pool: FeaturePool, feature_indices=None) -> FeatureMatrix:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeError(f"X must be a non-empty 2-D array, got shape {X.shape}")
    raw = pool.evaluate(X, feature_indices)  # (N, M)
    n, m = raw.shape
    values = raw.T / np.sqrt(m * n)
    return FeatureMatrix(values, pool.fingerprint)


def mc_kernel_estimate(x, x2, pool: FeaturePool) -> float:
    """``(1/M0) sum_m phi(x, w_m) phi(x2, w_m)`` over the whole pool.

    For cosine-with-phase features this estimates half of
    ``exp(-|x - x2|^2 / (2 sigma^2))``.
    """
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != (pool.dim,) or x2.shape != (pool.dim,):
        raise ShapeError(f"points must have shape ({pool.dim},)")
    f1 = np.cos(pool.directions @ x + pool.phases)
    f2 = np.cos(pool.directions @ x2 + pool.phases)
    return float(np.mean(f1 * f2))


def gaussian_kernel(x, x2, bandwidth: float) -> float:
    diff = np.asarray(x, float) - np.asarray(x2, float)
    return float(np.exp(-(diff @ diff) / (2.0 * bandwidth ** 2)))


def median_heuristic(X, max_points: int = 1000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance on a subsample of at most `max_points` rows."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ArgumentError("median heuristic needs at least two points")
    if n > max_points:
        X = X[np.random.default_rng(seed).choice(n, max_points, replace=False)]
    med = float(np.median(pdist(X)))
    if not med > 0:
        raise ArgumentError("all sampled points coincide; median distance is zero")
    return med
