"""Leave-one-partition-out cross-validation and exhaustive grid search."""
from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .data import Dataset
from .errors import AllClearError, ConfigError, DataError
from .forest import TsfHyperParams
from .multivariate import MultivariateStrategy, fit_multivariate
from .seeding import check_seed, mix
from .tree import ClassWeights
from .verification import get_scorer, tabulate


class LeakageError(AssertionError):
    """A training and a validation set share an instance."""


@dataclass(frozen=True)
class PartitionFold:
    validation_partition: int
    train_partitions: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "train_partitions", frozenset(int(p) for p in self.train_partitions))
        if self.validation_partition in self.train_partitions:
            raise ConfigError(f"partition {self.validation_partition} is both training and validation")

    def split(self, dataset: Dataset) -> tuple[Dataset, Dataset]:
        train = dataset.select(self.train_partitions)
        valid = dataset.select([self.validation_partition])
        check_disjoint(train, valid)
        return train, valid


def check_disjoint(train: Dataset, valid: Dataset) -> None:
    shared = set(train.ids) & set(valid.ids)
    if shared:
        raise LeakageError(f"{len(shared)} instance(s) in both training and validation, e.g. {min(shared)!r}")


def make_partition_folds(dataset: Dataset) -> list[PartitionFold]:
    parts = dataset.partitions
    if len(parts) < 2:
        raise DataError(f"cross-validation needs at least two partitions, found {parts}")
    return [PartitionFold(p, frozenset(parts) - {p}) for p in parts]


@dataclass(frozen=True)
class HyperParameterGrid:
    n_estimators: tuple[int, ...]
    max_depth: tuple[int, ...]
    class_weights: tuple[ClassWeights, ...]
    strategy: MultivariateStrategy = MultivariateStrategy.COLUMN_ENSEMBLE
    base: TsfHyperParams = field(default_factory=TsfHyperParams)

    def __post_init__(self):
        object.__setattr__(self, "n_estimators", tuple(int(v) for v in self.n_estimators))
        object.__setattr__(self, "max_depth", tuple(int(v) for v in self.max_depth))
        object.__setattr__(self, "class_weights", tuple(ClassWeights.parse(w) for w in self.class_weights))
        object.__setattr__(self, "strategy", MultivariateStrategy.parse(self.strategy))
        for name in ("n_estimators", "max_depth", "class_weights"):
            if not getattr(self, name):
                raise ConfigError(f"grid dimension {name} is empty")

    def __len__(self):
        return len(self.n_estimators) * len(self.max_depth) * len(self.class_weights)

    def points(self) -> list[TsfHyperParams]:
        """All combinations, estimators varying slowest and weights fastest."""
        return [
            self.base.with_(n_estimators=n, max_depth=d, class_weights=w)
            for n, d, w in itertools.product(self.n_estimators, self.max_depth, self.class_weights)
        ]

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParameterGrid":
        d = dict(d)
        for key in ("n_estimators", "max_depth", "class_weights"):
            if key not in d:
                raise ConfigError(f"grid specification lacks {key!r}")
        base = d.pop("base", None)
        unknown = set(d) - {"n_estimators", "max_depth", "class_weights", "strategy"}
        if unknown:
            raise ConfigError(f"unknown grid field(s): {sorted(unknown)}")
        base = TsfHyperParams() if base is None else TsfHyperParams.from_dict(base)
        return cls(base=base, **d)

    def to_dict(self) -> dict:
        return {
            "n_estimators": list(self.n_estimators),
            "max_depth": list(self.max_depth),
            "class_weights": [w.as_list() for w in self.class_weights],
            "strategy": self.strategy.value,
            "base": self.base.to_dict(),
        }


DEFAULT_GRID = HyperParameterGrid(
    n_estimators=(100, 500, 1000),
    max_depth=(2, 3, 5, 10),
    class_weights=(ClassWeights(1, 1), ClassWeights(1, 0.75), ClassWeights(1, 0.5), ClassWeights(0.33, 0.67)),
)


def point_key(params: TsfHyperParams, strategy: MultivariateStrategy) -> str:
    """Canonical text for a grid point; fold seeds hang off it, not off grid position."""
    w = params.class_weights
    return f"{strategy.value}|{params.n_estimators}|{params.max_depth}|{w.w_xm!r}|{w.w_cbn!r}"


def fold_seed(seed: int, params: TsfHyperParams, strategy: MultivariateStrategy, fold: PartitionFold) -> int:
    return mix(seed, point_key(params, strategy), fold.validation_partition)


def score_fold(fold: PartitionFold, params: TsfHyperParams, dataset: Dataset, scorer: str = "hss", seed: int = 0,
               strategy=MultivariateStrategy.COLUMN_ENSEMBLE, n_jobs: int = 1) -> float | None:
    """Fit on the fold's training partitions and score its validation partition.

    Returns ``None`` when the score is undefined.
    """
    score = get_scorer(scorer)
    strategy = MultivariateStrategy.parse(strategy)
    train, valid = fold.split(dataset)
    if not len(train) or not len(valid):
        raise DataError(f"fold validating on partition {fold.validation_partition} has an empty side")
    model = fit_multivariate(train, strategy, params, fold_seed(seed, params, strategy, fold), n_jobs)
    return score(tabulate(valid.is_xm, model.predict(valid)))


@dataclass(frozen=True)
class CvResult:
    params: TsfHyperParams
    strategy: MultivariateStrategy
    per_fold_scores: tuple[tuple[int, float | None], ...]
    index: int = 0

    @property
    def mean_score(self) -> float | None:
        defined = [s for _, s in self.per_fold_scores if s is not None]
        return math.fsum(defined) / len(defined) if defined else None

    def rank_key(self):
        """Sort key: best first; undefined last; ties go to the simplest model."""
        m = self.mean_score
        w = self.params.class_weights
        return (m is None, -(m or 0.0), self.params.n_estimators, self.params.max_depth, w.w_xm, w.w_cbn)


def select_best(results) -> CvResult:
    if not results:
        raise ConfigError("no grid results to select from")
    return min(results, key=CvResult.rank_key)


def grid_search(dataset: Dataset, grid: HyperParameterGrid, scorer: str = "hss", seed: int = 0,
                n_jobs: int = 1, order=None) -> tuple[TsfHyperParams, list[CvResult]]:
    """Evaluate every grid point on every leave-one-partition-out fold.

    A fold whose fit fails is recorded with an undefined score. ``order``
    optionally permutes the evaluation sequence of (point, fold) tasks; it
    never changes the outcome. Results are returned in grid order.
    """
    get_scorer(scorer)
    seed = check_seed(seed)
    folds = make_partition_folds(dataset)
    points = grid.points()
    tasks = [(i, j) for i in range(len(points)) for j in range(len(folds))]
    if order is not None:
        tasks = [tasks[k] for k in order]

    def run(task):
        i, j = task
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return task, score_fold(folds[j], points[i], dataset, scorer, seed, grid.strategy)
        except LeakageError:
            raise
        except AllClearError:
            return task, None

    if n_jobs is not None and n_jobs != 1:
        with ThreadPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as pool:
            done = dict(pool.map(run, tasks))
    else:
        done = dict(run(t) for t in tasks)
    results = [
        CvResult(p, grid.strategy, tuple((f.validation_partition, done[(i, j)]) for j, f in enumerate(folds)), i)
        for i, p in enumerate(points)
    ]
    return select_best(results).params, results


def results_csv(results, scorer: str) -> str:
    """One row per (grid point, fold) followed by one ``mean`` row per grid point."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grid_index", "strategy", "n_estimators", "max_depth", "w_xm", "w_cbn", "fold", "scorer", "score"])

    def row(r, fold, score):
        p = r.params
        w.writerow([r.index, r.strategy.value, p.n_estimators, p.max_depth, repr(p.class_weights.w_xm),
                    repr(p.class_weights.w_cbn), fold, scorer, "" if score is None else repr(score)])

    for r in results:
        for fold, score in r.per_fold_scores:
            row(r, fold, score)
    for r in results:
        row(r, "mean", r.mean_score)
    return buf.getvalue()
