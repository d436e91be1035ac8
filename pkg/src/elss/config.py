"""Experiment configuration: a TOML file plus command-line overrides.

Schema (all keys optional; unknown keys are rejected)::

    seed = 0
    repeats = 10
    methods = ["ELSS1", "ELSS2", "RKS"]     # ELSS1 ELSS2 RKS EERF LKRF
    m_grid = [5, 10, 20]
    m0_multiplier = 10
    m0 = 2000                 # weights-hist only; default m0_multiplier * max(m_grid)
    n0 = 0                    # leverage subsample size; 0 means all training inputs
    lambda = "1/N"            # or a number
    lambda_grid = [1e-8, 1e-4, "1/N", 1.0, 1e4]
    bandwidth = "median"      # or a number, or a list of numbers (validation grid)
    rho_grid = [1.0]          # LKRF divergence radius
    lkrf_sample = false
    record_timing = false
    fewshot_k_grid = [5, 10, 20]
    fewshot_m = 25
    fewshot_elss = "ELSS2"

    [dataset]
    kind = "synthetic"        # synthetic | csv | libsvm
    path = "train.csv"
    test_path = "test.csv"    # optional; otherwise a random split
    task = "regression"
    target_column = -1
    test_fraction = 0.2
    n_train = 2000            # synthetic only from here on
    n_test = 500
    d = 5
    bandwidth = 2.0
    n_anchors = 10
    noise_std = 0.05
    seed = 0

    [learner]
    kind = "auto"             # auto | ridge | logistic
    gamma_grid = [1e-6]
    max_iter = 1000
    tol = 1e-8
    validation_fraction = 0.2

    [diagnose]
    n0_grid = [100, 400, 1600]
    m0 = 30
    d = 5
    input_std = 1.0
    lambda = "1/N0"
    seeds = 20
    delta = 0.5
    bandwidth = "median"
    variance_z = 1.0
    variance_pools = 10000
    oracle_mc_samples = 1000000
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

METHODS = ("ELSS1", "ELSS2", "RKS", "EERF", "LKRF")
FEWSHOT_METHODS = ("LR", "ELSS+LR", "RF+LR")


@dataclass
class DatasetSpec:
    kind: str = "synthetic"
    path: str | None = None
    test_path: str | None = None
    task: str = "regression"
    target_column: int = -1
    test_fraction: float = 0.2
    n_train: int = 2000
    n_test: int = 500
    d: int = 5
    bandwidth: float = 2.0
    n_anchors: int = 10
    noise_std: float = 0.05
    seed: int = 0


@dataclass
class LearnerSpec:
    kind: str = "auto"
    gamma_grid: list = field(default_factory=lambda: [1e-6])
    max_iter: int = 1000
    tol: float = 1e-8
    validation_fraction: float = 0.2


@dataclass
class DiagnoseSpec:
    n0_grid: list = field(default_factory=lambda: [100, 400, 1600])
    m0: int = 30
    d: int = 5
    input_std: float = 1.0
    lam: object = "1/N0"
    seeds: int = 20
    delta: float = 0.5
    bandwidth: object = "median"
    variance_z: float = 1.0
    variance_pools: int = 10000
    oracle_mc_samples: int = 1_000_000


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    diagnose: DiagnoseSpec = field(default_factory=DiagnoseSpec)
    seed: int = 0
    repeats: int = 10
    methods: list = field(default_factory=lambda: ["ELSS1", "ELSS2", "RKS"])
    m_grid: list = field(default_factory=lambda: [5, 10, 20])
    m0_multiplier: int = 10
    m0: int | None = None
    n0: int = 0
    lam: object = "1/N"
    lambda_grid: list = field(default_factory=lambda: [1e-8, 1e-4, "1/N", 1.0, 1e4])
    bandwidth: object = "median"
    rho_grid: list = field(default_factory=lambda: [1.0])
    lkrf_sample: bool = False
    record_timing: bool = False
    fewshot_k_grid: list = field(default_factory=lambda: [5, 10, 20])
    fewshot_m: int = 25
    fewshot_elss: str = "ELSS2"

    def validate(self) -> "ExperimentConfig":
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown or empty methods {bad}; choose from {METHODS}")
        if not self.m_grid or any(int(m) < 1 for m in self.m_grid):
            raise ConfigError("m_grid must be a non-empty list of positive integers")
        if self.m0_multiplier < 1 or self.repeats < 1:
            raise ConfigError("m0_multiplier and repeats must be >= 1")
        if self.n0 < 0:
            raise ConfigError("n0 must be >= 0")
        parse_lambda(self.lam)
        for v in self.lambda_grid:
            parse_lambda(v)
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise ConfigError(f"bandwidth must be 'median', a number or a list, got {self.bandwidth!r}")
        else:
            bws = self.bandwidth if isinstance(self.bandwidth, list) else [self.bandwidth]
            if not bws or any(not 1e-10 <= float(b) <= 1e3 for b in bws):
                raise ConfigError("bandwidths must lie in [1e-10, 1e3]")
        if any(float(r) <= 0 for r in self.rho_grid) or not self.rho_grid:
            raise ConfigError("rho_grid must hold positive numbers")
        if self.fewshot_elss not in ("ELSS1", "ELSS2"):
            raise ConfigError("fewshot_elss must be ELSS1 or ELSS2")
        if self.dataset.kind not in ("synthetic", "csv", "libsvm"):
            raise ConfigError(f"unknown dataset kind {self.dataset.kind!r}")
        if self.dataset.kind != "synthetic" and not self.dataset.path:
            raise ConfigError("file datasets need a path")
        if self.dataset.task not in ("regression", "classification"):
            raise ConfigError(f"unknown task {self.dataset.task!r}")
        if self.learner.kind not in ("auto", "ridge", "logistic"):
            raise ConfigError(f"unknown learner {self.learner.kind!r}")
        if not self.learner.gamma_grid or any(float(g) < 0 for g in self.learner.gamma_grid):
            raise ConfigError("gamma_grid must hold non-negative numbers")
        if not 0 < self.learner.validation_fraction < 1:
            raise ConfigError("validation_fraction must be in (0, 1)")
        return self


def parse_lambda(value, n=None):
    """Resolve a lambda setting: a number, ``"1/N"`` (needs `n`), or ``"1/N0"``."""
    if isinstance(value, str):
        token = value.replace(" ", "")
        if token in ("1/N", "1/N0"):
            if n is None:
                return token
            return 1.0 / n
        try:
            value = float(token)
        except ValueError:
            raise ConfigError(f"lambda must be a number or '1/N', got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"lambda must be a number or '1/N', got {value!r}")
    if value < 0:
        raise ConfigError("lambda must be non-negative")
    return float(value)


_RENAMES = {"lambda": "lam"}


def _fill(cls, table: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in table.items():
        name = _RENAMES.get(key, key)
        if name not in names or name in ("dataset", "learner", "diagnose"):
            raise ConfigError(f"unknown config key {where}{key!r}")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(obj: dict) -> ExperimentConfig:
    obj = dict(obj)
    sub = {}
    for name, cls in (("dataset", DatasetSpec), ("learner", LearnerSpec),
                      ("diagnose", DiagnoseSpec)):
        table = obj.pop(name, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        sub[name] = _fill(cls, table, f"{name}.")
    cfg = _fill(ExperimentConfig, obj, "")
    cfg.dataset, cfg.learner, cfg.diagnose = sub["dataset"], sub["learner"], sub["diagnose"]
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(Path(path), "rb") as fh:
            obj = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return config_from_dict(obj)
