"""Univariate Time Series Forest.

Each tree gets its own random interval set; its features are the mean, std
and slope over those intervals. Tree ``t`` is seeded with
``mix(seed, t)``, so the fitted model does not depend on how trees are
scheduled across workers.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import BinaryLabel
from .errors import ConfigError, DataError
from .intervals import DEFAULT_MIN_INTERVAL_LENGTH, IntervalSet, extract_features_batch, sample_intervals
from .seeding import check_seed, mix
from .tree import ClassWeights, DecisionTree, as_is_xm, fit_tree


@dataclass(frozen=True)
class TsfHyperParams:
    n_estimators: int = 100
    max_depth: int = 5
    class_weights: ClassWeights = field(default_factory=ClassWeights)
    intervals_per_tree: int | str = "auto"
    min_interval_length: int = DEFAULT_MIN_INTERVAL_LENGTH
    threshold: float = 0.5
    min_leaf: int = 1

    def __post_init__(self):
        object.__setattr__(self, "class_weights", ClassWeights.parse(self.class_weights))
        for name in ("n_estimators", "max_depth", "min_interval_length", "min_leaf"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        ipt = self.intervals_per_tree
        if ipt != "auto":
            if isinstance(ipt, bool) or int(ipt) != ipt or ipt < 1:
                raise ConfigError(f"intervals_per_tree must be 'auto' or a positive integer, got {ipt!r}")
            object.__setattr__(self, "intervals_per_tree", int(ipt))
        if not 0.0 < float(self.threshold) < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        object.__setattr__(self, "threshold", float(self.threshold))

    def resolve_intervals(self, n: int) -> int:
        if self.intervals_per_tree == "auto":
            return math.ceil(math.sqrt(n))
        return self.intervals_per_tree

    def with_(self, **changes) -> "TsfHyperParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "class_weights": self.class_weights.as_list(),
            "intervals_per_tree": self.intervals_per_tree,
            "min_interval_length": self.min_interval_length,
            "threshold": self.threshold,
            "min_leaf": self.min_leaf,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TsfHyperParams":
        known = {"n_estimators", "max_depth", "class_weights", "intervals_per_tree",
                 "min_interval_length", "threshold", "min_leaf"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown hyperparameter(s): {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class TsfModel:
    hyperparams: TsfHyperParams
    seed: int
    per_tree: tuple[tuple[IntervalSet, DecisionTree], ...]
    series_length: int

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.series_length:
            raise DataError(f"expected series of length {self.series_length}, got shape {X.shape}")
        return X

    def tree_probas(self, X) -> np.ndarray:
        """Per-tree XM probabilities, shape (n_estimators, n_series)."""
        X = self._check(X)
        return np.array([tree.predict_proba(extract_features_batch(X, ivs)) for ivs, tree in self.per_tree])

    def predict_proba_batch(self, X) -> np.ndarray:
        X = self._check(X)
        acc = np.zeros(len(X))
        for ivs, tree in self.per_tree:
            acc = acc + tree.predict_proba(extract_features_batch(X, ivs))
        return acc / len(self.per_tree)

    def predict_batch(self, X) -> np.ndarray:
        """Boolean XM mask (probability >= threshold)."""
        return self.predict_proba_batch(X) >= self.hyperparams.threshold

    def to_dict(self) -> dict:
        return {
            "hyperparams": self.hyperparams.to_dict(),
            "seed": self.seed,
            "series_length": self.series_length,
            "trees": [
                {"intervals": [[iv.start, iv.end] for iv in ivs], "tree": tree.to_dict()}
                for ivs, tree in self.per_tree
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TsfModel":
        n = int(d["series_length"])
        per_tree = tuple(
            (IntervalSet(tuple(tuple(iv) for iv in t["intervals"]), n), DecisionTree.from_dict(t["tree"]))
            for t in d["trees"]
        )
        return cls(TsfHyperParams.from_dict(d["hyperparams"]), int(d["seed"]), per_tree, n)


def _as_matrix(series_set) -> np.ndarray:
    try:
        X = np.asarray(series_set, dtype=np.float64)
    except ValueError:
        raise DataError("all training series must have equal length") from None
    if X.ndim != 2:
        raise DataError("expected a list of equal-length univariate series")
    return X


def fit_tsf(series_set, labels, hp: TsfHyperParams | None = None, seed: int = 0, n_jobs: int = 1) -> TsfModel:
    """Fit a forest on equal-length univariate series.

    ``n_jobs > 1`` fits trees on a thread pool; the result is identical to
    serial fitting.
    """
    hp = TsfHyperParams() if hp is None else hp
    seed = check_seed(seed)
    X = _as_matrix(series_set)
    if X.shape[0] == 0:
        raise DataError("cannot fit on an empty training set")
    n = X.shape[1]
    if n < hp.min_interval_length:
        raise DataError(f"series length {n} is shorter than min_interval_length {hp.min_interval_length}")
    if not np.isfinite(X).all():
        raise DataError("training series contain missing or non-finite values; repair them first")
    y = as_is_xm(labels)
    if len(y) != len(X):
        raise DataError(f"{len(X)} series but {len(y)} labels")
    if y.all() or not y.any():
        warnings.warn("training set contains a single class", RuntimeWarning, stacklevel=2)
    k = hp.resolve_intervals(n)

    def fit_one(t):
        child = mix(seed, t)
        ivs = sample_intervals(n, k, hp.min_interval_length, child)
        tree = fit_tree(extract_features_batch(X, ivs), y, hp.class_weights, hp.max_depth, hp.min_leaf, child)
        return ivs, tree

    if n_jobs is not None and n_jobs != 1 and hp.n_estimators > 1:
        workers = None if n_jobs < 0 else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_tree = tuple(pool.map(fit_one, range(hp.n_estimators)))
    else:
        per_tree = tuple(fit_one(t) for t in range(hp.n_estimators))
    return TsfModel(hp, seed, per_tree, n)


def predict_proba(model: TsfModel, series) -> float:
    """Unweighted mean of the trees' XM probabilities for one series."""
    return float(model.predict_proba_batch(np.asarray(series, dtype=np.float64)[None, :])[0])


def predict(model: TsfModel, series) -> BinaryLabel:
    return BinaryLabel.XM if predict_proba(model, series) >= model.hyperparams.threshold else BinaryLabel.CBN
