"""Numerical instruments for the approximation theory behind leverage sampling.

Everything here works on Gaussian inputs ``x ~ N(0, s^2 I_d)``, the one
regime where the feature Gram kernel

    g(w, w') = E_x[cos(x.w + b) cos(x.w' + b')]

has a closed form. Using ``E cos(u.x + c) = exp(-s^2 |u|^2 / 2) cos(c)`` and
the product-to-sum identity,

    g = 1/2 [exp(-s^2 |w - w'|^2 / 2) cos(b - b') + exp(-s^2 |w + w'|^2 / 2) cos(b + b')].
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .errors import ArgumentError, NotPDError, ShapeError
from .features import FeaturePool, build_feature_matrix, sample_pool
from .leverage import leverage_distribution, psd_eigh, rank_tolerance, shrinkage_ratios
from .seeding import derive_seed


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    delta_hat: float
    mu: float

    def to_dict(self) -> dict:
        return {"eigenvalues": self.eigenvalues.tolist(), "delta_hat": self.delta_hat,
                "mu": self.mu}


@dataclass(frozen=True)
class ErrorTermComponents:
    er_k: float
    er_g: float
    deg_lambda: float
    sigma_min: float
    floor_hit: bool

    def to_dict(self) -> dict:
        return asdict(self)


def oracle_g(pool: FeaturePool, input_std: float = 1.0) -> np.ndarray:
    """Exact ``G = E[Phi Phi^T]`` (entries ``g(w_i, w_j) / M0``) for Gaussian inputs."""
    W, b = pool.directions, pool.phases
    s2 = float(input_std) ** 2
    sq = (W * W).sum(axis=1)
    cross = W @ W.T
    minus = np.clip(sq[:, None] + sq[None, :] - 2.0 * cross, 0.0, None)
    plus = np.clip(sq[:, None] + sq[None, :] + 2.0 * cross, 0.0, None)
    g = 0.5 * (np.exp(-0.5 * s2 * minus) * np.cos(b[:, None] - b[None, :])
               + np.exp(-0.5 * s2 * plus) * np.cos(b[:, None] + b[None, :]))
    g = 0.5 * (g + g.T)
    return g / pool.size


def monte_carlo_g(pool: FeaturePool, input_std: float, n_samples: int, seed,
                  chunk: int = 100_000) -> np.ndarray:
    """Brute-force ``E[Phi Phi^T]`` from `n_samples` Gaussian inputs (entries scaled by 1/M0)."""
    rng = np.random.default_rng(seed)
    acc = np.zeros((pool.size, pool.size))
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        X = input_std * rng.standard_normal((n, pool.dim))
        F = pool.evaluate(X)
        acc += F.T @ F
        done += n
    return acc / (n_samples * pool.size)


def empirical_gram(pool: FeaturePool, X) -> np.ndarray:
    return build_feature_matrix(X, pool).gram()


def spectral_delta(A, B, mu: float) -> float:
    """Smallest ``Delta`` with ``(1-D)(B + mu I) <= A + mu I <= (1+D)(B + mu I)``.

    The direction is fixed: `A` approximates `B`.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"A {A.shape} and B {B.shape} must be square and equal-sized")
    eye = np.eye(A.shape[0])
    try:
        ev = scipy.linalg.eigh(0.5 * (A + A.T) + mu * eye, 0.5 * (B + B.T) + mu * eye,
                               eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NotPDError(f"B + mu I is not positive definite: {exc}") from exc
    return float(max(ev.max() - 1.0, 1.0 - ev.min()))


def spectral_report(A, B, mu: float) -> SpectralReport:
    s, _ = psd_eigh(A)
    return SpectralReport(s, spectral_delta(A, B, mu), float(mu))


def degrees_of_freedom(eigenvalues, lam: float) -> float:
    """``sum_i s_i / (s_i + lam)``."""
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")
    s = np.asarray(eigenvalues, dtype=float)
    if np.any(s < 0):
        raise ArgumentError("eigenvalues must be non-negative")
    return float(shrinkage_ratios(s, lam).sum())


def gaussian_mc_variance(z: float, m0: int) -> float:
    """``(1 - exp(-z^2))^2 / (2 M0)``: variance of the Monte-Carlo Gaussian kernel estimate.

    Applies to ``(1/M0) sum_m cos(w_m . (x - x'))``, i.e. random features with
    the phase integrated out, where ``z = |x - x'| / sigma``.
    """
    if m0 < 1:
        raise ArgumentError("m0 must be >= 1")
    return float((1.0 - np.exp(-z * z)) ** 2 / (2.0 * m0))


def cosine_phase_mc_variance(z: float, m0: int) -> float:
    """Variance of ``(1/M0) sum_m phi(x, w_m) phi(x', w_m)`` with random phases.

    Each term is ``cos(w.d)/2 + cos(w.(x + x') + 2b)/2``; the second part is
    uncorrelated with the first and has variance 1/8, giving
    ``((1 - exp(-z^2))^2 + 1) / (8 M0)``.
    """
    if m0 < 1:
        raise ArgumentError("m0 must be >= 1")
    return float(((1.0 - np.exp(-z * z)) ** 2 + 1.0) / (8.0 * m0))


def empirical_kernel_variance(x, x2, m0: int, bandwidth: float, n_pools: int, seed,
                              phase_averaged: bool = True) -> float:
    """Sample variance of the Monte-Carlo kernel estimate across `n_pools` independent pools.

    With `phase_averaged` the estimate is ``mean_m cos(w_m . (x - x2))``
    (compare :func:`gaussian_mc_variance`); otherwise it is the raw
    cosine-with-phase product average (compare :func:`cosine_phase_mc_variance`).
    """
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.ndim != 1:
        raise ShapeError("x and x2 must be vectors of equal length")
    if n_pools < 2:
        raise ArgumentError("need at least two pools for a sample variance")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n_pools, m0, x.size)) / bandwidth
    if phase_averaged:
        est = np.cos(W @ (x - x2)).mean(axis=1)
    else:
        b = rng.uniform(0.0, 2.0 * np.pi, (n_pools, m0))
        est = (np.cos(W @ x + b) * np.cos(W @ x2 + b)).mean(axis=1)
    return float(np.var(est, ddof=1))


def tv_distance(p, q) -> float:
    """``sum_m |p_m - q_m|`` (no factor 1/2)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ShapeError(f"distributions of shapes {p.shape} and {q.shape} differ")
    return float(np.abs(p - q).sum())


def oracle_leverage(pool: FeaturePool, lam: float, input_std: float = 1.0) -> np.ndarray:
    """Population leverage distribution ``diag(G (G + lam I)^{-1}) / Tr`` under Gaussian inputs."""
    return leverage_distribution(oracle_g(pool, input_std), lam)


def theorem1_components(pool: FeaturePool, X_sample, lam: float, delta_param: float,
                        n_pairs: int = 200, seed=0) -> ErrorTermComponents:
    """Measurable parts of the kernel-approximation and Gram-eigenvalue error terms.

    ``er_k`` is the root mean (over random input pairs) of the estimated
    variance of the pool's kernel estimate; ``er_g`` is
    ``sqrt(Delta * lam / sigma_min)`` with ``sigma_min`` the smallest
    eigenvalue of the empirical ``Phi Phi^T``. Constants are dropped.
    """
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")
    if not 0 < delta_param <= 0.5:
        raise ArgumentError("delta_param must be in (0, 0.5]")
    X = np.asarray(X_sample, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ArgumentError("need at least two sample points")

    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, n_pairs)
    j = rng.integers(0, n, n_pairs)
    F = pool.evaluate(X)  # (N, M0)
    prods = F[i] * F[j]  # per-feature terms of the kernel estimate
    var_khat = prods.var(axis=1, ddof=1) / pool.size
    er_k = float(np.sqrt(var_khat.mean()))

    s, _ = psd_eigh(empirical_gram(pool, X))
    floor = rank_tolerance(s)
    sigma_min = float(s[-1])
    floor_hit = bool(sigma_min <= floor)
    sigma_eff = max(sigma_min, floor, np.finfo(float).tiny)
    er_g = float(np.sqrt(delta_param * lam / sigma_eff))
    return ErrorTermComponents(er_k, er_g, degrees_of_freedom(s, lam), sigma_min, floor_hit)


def spectral_trial(n0: int, m0: int, d: int, lam: float, seed, bandwidth: float,
                 input_std: float = 1.0):
    """One draw of (Delta-hat, TV distance) for a fresh pool and fresh Gaussian sample.

    Pool and data come from independent child streams of `seed`.
    """
    pool = sample_pool(m0, d, bandwidth, derive_seed(seed, "pool"))
    rng = np.random.default_rng(derive_seed(seed, "data"))
    X = input_std * rng.standard_normal((n0, d))
    A = empirical_gram(pool, X)
    G = oracle_g(pool, input_std)
    delta = spectral_delta(A, G, lam)
    tv = tv_distance(leverage_distribution(A, lam), leverage_distribution(G, lam))
    return delta, tv
