"""Experiment runners: method sweeps, lambda sweeps, weight dumps, few-shot runs, diagnostics.

Seed derivation (root = ``config.seed``):

* feature pool of a run:        ``derive_seed(root, "pool", M, repeat)``
* method-specific randomness:   ``derive_seed(root, method, M, repeat)``
* validation split of a run:    ``derive_seed(method_seed, "validation")``

All methods at the same (M, repeat) share one pool, and a method's stream
depends only on its own name, so adding methods leaves other rows unchanged.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import diagnostics as diag
from .baselines import eerf_select, lkrf_select, rks_select
from .config import ExperimentConfig, parse_lambda
from .data import (Dataset, Task, apply_standardization, load_dataset,
                   make_synthetic_rkhs, standardize, train_test_split)
from .errors import ElssError, InsufficientSamplesError, NonConvergenceWarning
from .features import FeaturePool, build_feature_matrix, median_heuristic, sample_pool
from .learners import error_rate, fit_model, predict, train_logistic
from .leverage import (LeverageWeights, compute_leverage_weights, ridge_leverage_diagonal,
                       resample_weighted, select_top_m)
from .seeding import derive_seed

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLUMNS = ("row_type", "experiment", "method", "m", "m0", "k", "lambda", "repeat", "seed",
           "bandwidth", "gamma", "train_error", "test_error", "train_error_std",
           "test_error_std", "n_runs", "wall_time_ms", "status")


@dataclass
class ResultRecord:
    row_type: str
    experiment: str
    method: str
    m: int | None = None
    m0: int | None = None
    k: int | None = None
    lam: float | None = None
    repeat: int | None = None
    seed: int | None = None
    bandwidth: float | None = None
    gamma: float | None = None
    train_error: float | None = None
    test_error: float | None = None
    train_error_std: float | None = None
    test_error_std: float | None = None
    n_runs: int = 1
    wall_time_ms: int | None = None
    status: str = "ok"

    def values(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return [d[c] for c in COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_csv(records) -> str:
    lines = [f"# elss-results schema={SCHEMA_VERSION}", ",".join(COLUMNS)]
    lines += [",".join(_fmt(v) for v in r.values()) for r in records]
    return "\n".join(lines) + "\n"


def records_to_dicts(records) -> list[dict]:
    return [dict(zip(COLUMNS, r.values())) for r in records]


# ---------------------------------------------------------------- data


def prepare_data(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Load or generate the dataset, split it, and standardize with train statistics."""
    spec = cfg.dataset
    task = Task.parse(spec.task)
    if spec.kind == "synthetic":
        full = make_synthetic_rkhs(spec.n_train + spec.n_test, spec.d, spec.bandwidth,
                                   spec.n_anchors, spec.noise_std, spec.seed)
        train = full.subset(np.arange(spec.n_train))
        test = full.subset(np.arange(spec.n_train, spec.n_train + spec.n_test))
    else:
        train = load_dataset(spec.path, task, spec.target_column)
        if spec.test_path:
            test = load_dataset(spec.test_path, task, spec.target_column,
                                n_features=train.n_features)
        else:
            train, test = train_test_split(train, spec.test_fraction, spec.seed)
    train, params = standardize(train)
    test = apply_standardization(test, params)
    return train, test


def resolve_bandwidths(cfg: ExperimentConfig, X) -> list[float]:
    if isinstance(cfg.bandwidth, str):
        return [median_heuristic(X, seed=cfg.seed)]
    if isinstance(cfg.bandwidth, list):
        return [float(b) for b in cfg.bandwidth]
    return [float(cfg.bandwidth)]


def learner_kind(cfg: ExperimentConfig, task: Task) -> str:
    if cfg.learner.kind != "auto":
        return cfg.learner.kind
    return "ridge" if task is Task.REGRESSION else "logistic"


# ---------------------------------------------------------------- selection


def elss_weights(X_unlabeled, pool: FeaturePool, lam: float, n0: int = 0,
                 seed=None) -> LeverageWeights:
    """Leverage weights of the pool from inputs only (no targets involved)."""
    X = np.asarray(X_unlabeled, dtype=float)
    if n0 and n0 < X.shape[0]:
        X = X[np.sort(np.random.default_rng(seed).choice(X.shape[0], n0, replace=False))]
    return compute_leverage_weights(build_feature_matrix(X, pool), lam)


def select_features(method: str, X, y, pool: FeaturePool, m: int, lam: float, seed,
                    rho: float = 1.0, n0: int = 0, lkrf_sample: bool = False):
    if method == "RKS":
        return rks_select(pool, m, seed)
    if method in ("ELSS1", "ELSS2"):
        w = elss_weights(X, pool, lam, n0, derive_seed(seed, "n0"))
        return resample_weighted(w, m, seed) if method == "ELSS1" else select_top_m(w, m)
    phi_raw = pool.evaluate(X).T
    if method == "EERF":
        return eerf_select(phi_raw, y, m)
    if method == "LKRF":
        return lkrf_select(phi_raw, y, m, rho, sample=lkrf_sample, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def _fit(method, ds: Dataset, pool, m, lam, gamma, rho, seed, cfg, learner):
    fset = select_features(method, ds.inputs, ds.targets, pool, m, lam, seed, rho=rho,
                           n0=cfg.n0, lkrf_sample=cfg.lkrf_sample)
    return fit_model(ds.inputs, ds.targets, pool, fset, ds.task, gamma, learner=learner,
                     max_iter=cfg.learner.max_iter, tol=cfg.learner.tol)


def _score(model, ds: Dataset) -> float:
    return error_rate(ds.task, ds.targets, predict(model, ds.inputs))


def run_one(method, train: Dataset, test: Dataset, m: int, m0: int, lam: float,
            pool_seed: int, method_seed: int, bandwidths, cfg: ExperimentConfig):
    """Hyper-parameter selection (if any grid has >1 entry), then a fit on all of `train`.

    Returns ``(train_error, test_error, bandwidth, gamma)``.
    """
    learner = learner_kind(cfg, train.task)
    rhos = [float(r) for r in cfg.rho_grid] if method == "LKRF" else [1.0]
    gammas = [float(g) for g in cfg.learner.gamma_grid]
    grid = list(itertools.product(bandwidths, gammas, rhos))
    d = train.n_features
    if len(grid) > 1:
        fit_part, val_part = train_test_split(train, cfg.learner.validation_fraction,
                                              derive_seed(method_seed, "validation"))
        best, best_err = grid[0], math.inf
        for bw, gamma, rho in grid:
            pool = sample_pool(m0, d, bw, pool_seed)
            model = _fit(method, fit_part, pool, m, lam, gamma, rho, method_seed, cfg, learner)
            err = _score(model, val_part)
            if err < best_err:
                best, best_err = (bw, gamma, rho), err
    else:
        best = grid[0]
    bw, gamma, rho = best
    pool = sample_pool(m0, d, bw, pool_seed)
    model = _fit(method, train, pool, m, lam, gamma, rho, method_seed, cfg, learner)
    return _score(model, train), _score(model, test), bw, gamma


# ---------------------------------------------------------------- aggregation


def aggregate(records, key) -> list[ResultRecord]:
    """One aggregate row (mean and sample std over successful runs) per group."""
    groups: dict = {}
    for r in records:
        if r.row_type == "run":
            groups.setdefault(key(r), []).append(r)
    out = []
    for _, rows in sorted(groups.items(), key=lambda kv: kv[0]):
        ok = [r for r in rows if r.status == "ok"]
        first = rows[0]
        agg = ResultRecord("aggregate", first.experiment, first.method, m=first.m,
                           m0=first.m0, k=first.k, lam=first.lam, n_runs=len(ok),
                           status="ok" if ok else "no-successful-runs")
        if ok:
            tr = np.array([r.train_error for r in ok])
            te = np.array([r.test_error for r in ok])
            agg.train_error, agg.test_error = float(tr.mean()), float(te.mean())
            if len(ok) > 1:
                agg.train_error_std = float(tr.std(ddof=1))
                agg.test_error_std = float(te.std(ddof=1))
        out.append(agg)
    return out


def _run_row(experiment, method, m, m0, lam, repeat, root, train, test, bandwidths, cfg, k=None):
    pool_seed = derive_seed(root, "pool", m, repeat)
    method_seed = derive_seed(root, method, m, repeat)
    rec = ResultRecord("run", experiment, method, m=m, m0=m0, k=k, lam=lam, repeat=repeat,
                       seed=pool_seed)
    t0 = time.perf_counter()
    try:
        tr, te, bw, gamma = run_one(method, train, test, m, m0, lam if lam is not None else 0.0,
                                    pool_seed, method_seed, bandwidths, cfg)
        rec.train_error, rec.test_error, rec.bandwidth, rec.gamma = tr, te, bw, gamma
    except (ElssError, np.linalg.LinAlgError) as exc:
        log.warning("%s M=%d repeat=%d failed: %s", method, m, repeat, exc)
        rec.status = f"error:{type(exc).__name__}"
    if cfg.record_timing:
        rec.wall_time_ms = int(round(1000 * (time.perf_counter() - t0)))
    return rec


def _check_m0(m0, n):
    if m0 > n:
        log.warning("M0=%d exceeds the number of training points N=%d", m0, n)


def run_bench(cfg: ExperimentConfig, train: Dataset = None, test: Dataset = None):
    """Every (method, M, repeat) run plus one aggregate row per (method, M)."""
    cfg.validate()
    if train is None:
        train, test = prepare_data(cfg)
    lam = parse_lambda(cfg.lam, train.n_samples)
    bandwidths = resolve_bandwidths(cfg, train.inputs)
    _check_m0(cfg.m0_multiplier * max(cfg.m_grid), train.n_samples)
    runs = []
    for method in cfg.methods:
        for m in sorted(int(v) for v in cfg.m_grid):
            m0 = cfg.m0_multiplier * m
            method_lam = lam if method in ("ELSS1", "ELSS2") else None
            for rep in range(cfg.repeats):
                runs.append(_run_row("bench", method, m, m0, method_lam, rep, cfg.seed,
                                     train, test, bandwidths, cfg))
    runs.sort(key=lambda r: (r.method, r.m, r.repeat))
    return runs + aggregate(runs, key=lambda r: (r.method, r.m))


def run_lambda_sweep(cfg: ExperimentConfig, train: Dataset = None, test: Dataset = None):
    """Bench rows at each lambda of ``cfg.lambda_grid`` for the ELSS methods.

    Lambda-free methods in ``cfg.methods`` (RKS, EERF, LKRF) run once as baselines.
    """
    cfg.validate()
    if train is None:
        train, test = prepare_data(cfg)
    lams = [parse_lambda(v, train.n_samples) for v in cfg.lambda_grid]
    bandwidths = resolve_bandwidths(cfg, train.inputs)
    runs = []
    for method in cfg.methods:
        grid = lams if method in ("ELSS1", "ELSS2") else [None]
        for m in sorted(int(v) for v in cfg.m_grid):
            for li, lam in enumerate(grid):
                for rep in range(cfg.repeats):
                    rec = _run_row("lambda-sweep", method, m, cfg.m0_multiplier * m, lam, rep,
                                   cfg.seed, train, test, bandwidths, cfg)
                    rec._order = li
                    runs.append(rec)
    runs.sort(key=lambda r: (r.method, r.m, r._order, r.repeat))
    aggs = aggregate(runs, key=lambda r: (r.method, r.m, r._order))
    for r in runs:
        del r._order
    return runs + aggs


def run_weights_hist(cfg: ExperimentConfig, train: Dataset = None):
    """``(lambda, feature_index, weight)`` triples for every lambda of the grid."""
    cfg.validate()
    if train is None:
        train, _ = prepare_data(cfg)
    m0 = cfg.m0 or cfg.m0_multiplier * max(cfg.m_grid)
    bw = resolve_bandwidths(cfg, train.inputs)[0]
    pool = sample_pool(m0, train.n_features, bw, derive_seed(cfg.seed, "weights-hist"))
    phi = build_feature_matrix(train.inputs, pool)
    rows = []
    for v in cfg.lambda_grid:
        lam = parse_lambda(v, train.n_samples)
        w = compute_leverage_weights(phi, lam)
        rows.extend((lam, i, float(q)) for i, q in enumerate(w.weights))
    return rows


def format_weights_csv(rows) -> str:
    lines = [f"# elss-weights schema={SCHEMA_VERSION}", "lambda,feature_index,weight"]
    lines += [f"{_fmt(lam)},{i},{_fmt(q)}" for lam, i, q in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- few-shot


def _raw_logistic(labeled: Dataset, test: Dataset, gamma, cfg):
    """Logistic regression on the standardized inputs plus a constant column."""
    def design(X):
        return np.hstack([X, np.ones((X.shape[0], 1))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        theta, _ = train_logistic(design(labeled.inputs), labeled.targets, gamma,
                                  cfg.learner.max_iter, cfg.learner.tol)

    def err(ds):
        pred = np.where(design(ds.inputs) @ theta >= 0, 1.0, -1.0)
        return error_rate(Task.CLASSIFICATION, ds.targets, pred)
    return err(labeled), err(test)


def _fewshot_one(method, labeled, unlabeled_X, test, pool, m, lam, gamma, seed, cfg):
    if method == "LR":
        return _raw_logistic(labeled, test, gamma, cfg)
    if method == "ELSS+LR":
        w = elss_weights(unlabeled_X, pool, lam, cfg.n0, derive_seed(seed, "n0"))
        fset = (select_top_m(w, m) if cfg.fewshot_elss == "ELSS2"
                else resample_weighted(w, m, seed))
    else:
        fset = rks_select(pool, m, seed)
    model = fit_model(labeled.inputs, labeled.targets, pool, fset, Task.CLASSIFICATION, gamma,
                      learner="logistic", max_iter=cfg.learner.max_iter, tol=cfg.learner.tol)
    return _score(model, labeled), _score(model, test)


def run_fewshot(cfg: ExperimentConfig, train: Dataset = None, test: Dataset = None):
    """K labeled points per class; ELSS weights come from all (unlabeled) training inputs."""
    cfg.validate()
    if train is None:
        train, test = prepare_data(cfg)
    if train.task is not Task.CLASSIFICATION:
        raise InsufficientSamplesError("few-shot runs need a classification dataset")
    m = cfg.fewshot_m
    m0 = cfg.m0_multiplier * m
    lam = parse_lambda(cfg.lam, train.n_samples)
    bw = resolve_bandwidths(cfg, train.inputs)[0]
    gamma = float(cfg.learner.gamma_grid[0])
    pos = np.flatnonzero(train.targets > 0)
    neg = np.flatnonzero(train.targets < 0)
    runs = []
    for k in sorted(int(v) for v in cfg.fewshot_k_grid):
        if min(len(pos), len(neg)) < k:
            raise InsufficientSamplesError(
                f"K={k} labeled points per class requested but classes have "
                f"{len(pos)} and {len(neg)} training points")
        for rep in range(cfg.repeats):
            rng = np.random.default_rng(derive_seed(cfg.seed, "fewshot-labels", k, rep))
            idx = np.sort(np.concatenate([rng.choice(pos, k, replace=False),
                                          rng.choice(neg, k, replace=False)]))
            labeled = train.subset(idx)
            pool_seed = derive_seed(cfg.seed, "fewshot-pool", k, rep)
            pool = sample_pool(m0, train.n_features, bw, pool_seed)
            for method in ("LR", "ELSS+LR", "RF+LR"):
                rec = ResultRecord("run", "fewshot", method, m=None if method == "LR" else m,
                                   m0=None if method == "LR" else m0, k=k,
                                   lam=lam if method == "ELSS+LR" else None, repeat=rep,
                                   seed=pool_seed, bandwidth=bw, gamma=gamma)
                t0 = time.perf_counter()
                try:
                    rec.train_error, rec.test_error = _fewshot_one(
                        method, labeled, train.inputs, test, pool, m, lam, gamma,
                        derive_seed(cfg.seed, method, k, rep), cfg)
                except (ElssError, np.linalg.LinAlgError) as exc:
                    rec.status = f"error:{type(exc).__name__}"
                if cfg.record_timing:
                    rec.wall_time_ms = int(round(1000 * (time.perf_counter() - t0)))
                runs.append(rec)
    runs.sort(key=lambda r: (r.method, r.k, r.repeat))
    return runs + aggregate(runs, key=lambda r: (r.method, r.k))


# ---------------------------------------------------------------- diagnostics


def _strictly_decreasing(v) -> bool:
    return all(a > b for a, b in zip(v, v[1:]))


def run_diagnose(cfg: ExperimentConfig) -> dict:
    """Spectral-approximation, leverage-distance, variance and error-term report."""
    spec = cfg.diagnose
    d, m0 = spec.d, spec.m0
    root = cfg.seed
    if isinstance(spec.bandwidth, str):
        rng = np.random.default_rng(derive_seed(root, "diagnose-bandwidth"))
        bw = median_heuristic(spec.input_std * rng.standard_normal((1000, d)))
    else:
        bw = float(spec.bandwidth)

    check_pool = sample_pool(m0, d, bw, derive_seed(root, "diagnose-oracle"))
    G = diag.oracle_g(check_pool, spec.input_std)
    G_mc = diag.monte_carlo_g(check_pool, spec.input_std, spec.oracle_mc_samples,
                              derive_seed(root, "diagnose-oracle-mc"))
    oracle_check = {"n_samples": spec.oracle_mc_samples,
                    "max_abs_diff_scaled": float(np.abs(m0 * (G - G_mc)).max())}

    per_n0 = []
    for n0 in spec.n0_grid:
        lam = parse_lambda(spec.lam, n0) if isinstance(spec.lam, str) else float(spec.lam)
        deltas, tvs = [], []
        for s in range(spec.seeds):
            dlt, tv = diag.spectral_trial(n0, m0, d, lam, derive_seed(root, "diagnose", s),
                                        bw, spec.input_std)
            deltas.append(dlt)
            tvs.append(tv)
        # one representative draw for the spectral and error-term records
        seed0 = derive_seed(root, "diagnose", 0)
        pool = sample_pool(m0, d, bw, derive_seed(seed0, "pool"))
        X = spec.input_std * np.random.default_rng(derive_seed(seed0, "data")).standard_normal((n0, d))
        A = diag.empirical_gram(pool, X)
        G0 = diag.oracle_g(pool, spec.input_std)
        report = diag.spectral_report(A, G0, lam)
        _, trace_q = ridge_leverage_diagonal(A, lam)
        comps = diag.theorem1_components(pool, X, lam, spec.delta,
                                         seed=derive_seed(seed0, "pairs"))
        per_n0.append({
            "n0": n0, "lambda": lam,
            "delta_hat_median": float(np.median(deltas)), "tv_median": float(np.median(tvs)),
            "delta_hat": deltas, "tv": tvs,
            "deg_lambda": diag.degrees_of_freedom(report.eigenvalues, lam),
            "trace_q": trace_q,
            "deg_lambda_oracle": diag.degrees_of_freedom(np.clip(np.linalg.eigvalsh(G0), 0, None), lam),
            "spectral_report": report.to_dict(),
            "error_terms": comps.to_dict(),
        })

    z = spec.variance_z
    x = np.zeros(d)
    x2 = np.zeros(d)
    x2[0] = z * bw
    variance = {
        "z": z, "m0": m0, "n_pools": spec.variance_pools,
        "closed_form": diag.gaussian_mc_variance(z, m0),
        "empirical": diag.empirical_kernel_variance(x, x2, m0, bw, spec.variance_pools,
                                                    derive_seed(root, "diagnose-variance")),
    }
    return {
        "schema": f"elss-diagnose/{SCHEMA_VERSION}",
        "bandwidth": bw, "m0": m0, "d": d, "input_std": spec.input_std, "seeds": spec.seeds,
        "oracle_check": oracle_check,
        "per_n0": per_n0,
        "variance": variance,
        "trends": {
            "delta_hat_strictly_decreasing": _strictly_decreasing([r["delta_hat_median"] for r in per_n0]),
            "tv_strictly_decreasing": _strictly_decreasing([r["tv_median"] for r in per_n0]),
        },
    }
