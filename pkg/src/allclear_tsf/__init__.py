"""Interval-based multivariate Time Series Forest for all-clear flare forecasting."""
from ._kernels import BACKEND
from .data import (
    BinaryLabel,
    Dataset,
    FlareClass,
    TimeSeriesInstance,
    binarize_label,
    interpolate_missing,
    load_dataset,
    save_dataset,
)
from .errors import AllClearError, ConfigError, DataError
from .forest import TsfHyperParams, TsfModel, fit_tsf, predict, predict_proba
from .intervals import Interval, IntervalSet, extract_features, sample_intervals
from .multivariate import (
    MultivariateStrategy,
    MvTsfModel,
    StackingEnsemble,
    fit_multivariate,
    fit_stacking,
    predict_proba_mv,
)
from .prep import (
    FlareEvent,
    RegionSeries,
    SyntheticConfig,
    WindowConfig,
    generate_synthetic,
    slice_sliding_windows,
    undersample_negatives,
)
from .selection import HyperParameterGrid, grid_search, make_partition_folds, score_fold
from .tree import ClassWeights, DecisionTree, fit_tree
from .verification import ContingencyTable, SkillReport, full_report, tabulate

__version__ = "0.1.0"

__all__ = [
    "AllClearError",
    "BACKEND",
    "BinaryLabel",
    "ClassWeights",
    "ConfigError",
    "ContingencyTable",
    "DataError",
    "Dataset",
    "DecisionTree",
    "FlareClass",
    "FlareEvent",
    "HyperParameterGrid",
    "Interval",
    "IntervalSet",
    "MultivariateStrategy",
    "MvTsfModel",
    "RegionSeries",
    "SkillReport",
    "StackingEnsemble",
    "SyntheticConfig",
    "TimeSeriesInstance",
    "TsfHyperParams",
    "TsfModel",
    "WindowConfig",
    "binarize_label",
    "extract_features",
    "fit_multivariate",
    "fit_stacking",
    "fit_tree",
    "fit_tsf",
    "full_report",
    "generate_synthetic",
    "grid_search",
    "interpolate_missing",
    "load_dataset",
    "make_partition_folds",
    "predict",
    "predict_proba",
    "predict_proba_mv",
    "sample_intervals",
    "save_dataset",
    "score_fold",
    "slice_sliding_windows",
    "tabulate",
    "undersample_negatives",
]
