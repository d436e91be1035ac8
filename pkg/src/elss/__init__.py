"""Data-dependent random Fourier features via empirical leverage score sampling."""

from .baselines import eerf_select, lkrf_select, lkrf_weights, rks_select
from .data import (Dataset, Task, load_csv, load_dataset, load_libsvm, make_synthetic_rkhs,
                   standardize, train_test_split)
from .errors import ElssError, NonConvergenceWarning
from .features import (FeatureMatrix, FeaturePool, build_feature_matrix, gaussian_kernel,
                       median_heuristic, sample_pool)
from .learners import TrainedModel, fit_model, predict, train_logistic, train_ridge
from .leverage import (LeverageWeights, SelectionMode, WeightedFeatureSet,
                       compute_leverage_weights, resample_weighted, select_top_m, transform)
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "Dataset", "Task", "load_csv", "load_libsvm", "load_dataset", "standardize",
    "train_test_split", "make_synthetic_rkhs",
    "FeaturePool", "FeatureMatrix", "sample_pool", "build_feature_matrix",
    "gaussian_kernel", "median_heuristic",
    "LeverageWeights", "WeightedFeatureSet", "SelectionMode", "compute_leverage_weights",
    "resample_weighted", "select_top_m", "transform",
    "rks_select", "eerf_select", "lkrf_select", "lkrf_weights",
    "train_ridge", "train_logistic", "fit_model", "predict", "TrainedModel",
    "derive_seed", "ElssError", "NonConvergenceWarning",
]
