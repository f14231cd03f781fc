"""Multivariate composition of univariate forests, and stacking.

Column concatenation appends every parameter's series into one long series
and fits a single forest. Column ensemble fits one forest per parameter and
averages their probabilities with equal weight. Ensemble members are seeded
with ``mix(seed, parameter_name)`` so reordering columns cannot change a
member; with a single parameter both strategies use ``seed`` itself and are
therefore the same model.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .data import Dataset, TimeSeriesInstance
from .errors import ConfigError, DataError, PartitionOverlapError, SchemaMismatchError
from .forest import TsfHyperParams, TsfModel, fit_tsf
from .seeding import check_seed, mix
from .tree import ClassWeights, DecisionTree, fit_tree


class MultivariateStrategy(str, Enum):
    COLUMN_CONCATENATION = "column-concatenation"
    COLUMN_ENSEMBLE = "column-ensemble"

    @classmethod
    def parse(cls, value) -> "MultivariateStrategy":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {
            "column-concatenation": cls.COLUMN_CONCATENATION,
            "columnconcatenation": cls.COLUMN_CONCATENATION,
            "concatenation": cls.COLUMN_CONCATENATION,
            "concat": cls.COLUMN_CONCATENATION,
            "column-ensemble": cls.COLUMN_ENSEMBLE,
            "columnensemble": cls.COLUMN_ENSEMBLE,
            "ensemble": cls.COLUMN_ENSEMBLE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown strategy {value!r}; use column-concatenation or column-ensemble") from None


def concatenate_columns(instance: TimeSeriesInstance, parameter_order: Sequence[str]) -> np.ndarray:
    missing = [p for p in parameter_order if p not in instance.values]
    if missing:
        raise SchemaMismatchError(f"instance {instance.id!r} lacks parameter(s) {missing}")
    return np.concatenate([instance.values[p] for p in parameter_order])


def member_seed(seed: int, parameters: Sequence[str], name: str) -> int:
    return seed if len(parameters) == 1 else mix(seed, name)


@dataclass(frozen=True, eq=False)
class MvTsfModel:
    strategy: MultivariateStrategy
    parameters: tuple[str, ...]
    models: tuple[TsfModel, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "models", tuple(self.models))
        if self.strategy is MultivariateStrategy.COLUMN_ENSEMBLE and len(self.models) != len(self.parameters):
            raise DataError("column ensemble needs one model per parameter")
        if self.strategy is MultivariateStrategy.COLUMN_CONCATENATION and len(self.models) != 1:
            raise DataError("column concatenation holds exactly one model")

    @property
    def hyperparams(self) -> TsfHyperParams:
        return self.models[0].hyperparams

    @property
    def threshold(self) -> float:
        return self.hyperparams.threshold

    def check_schema(self, dataset: Dataset) -> None:
        if tuple(dataset.parameters) != self.parameters:
            raise SchemaMismatchError(
                f"model expects parameters {list(self.parameters)}, dataset has {list(dataset.parameters)}"
            )

    def column_probas(self, dataset: Dataset) -> np.ndarray:
        """Per-member probabilities, shape (n_members, n_instances)."""
        self.check_schema(dataset)
        if not len(dataset):
            return np.zeros((len(self.models), 0))
        cube = dataset.array(self.parameters)
        if self.strategy is MultivariateStrategy.COLUMN_CONCATENATION:
            return self.models[0].predict_proba_batch(cube.reshape(len(cube), -1))[None, :]
        return np.array([m.predict_proba_batch(cube[:, j, :]) for j, m in enumerate(self.models)])

    def predict_proba(self, dataset: Dataset) -> np.ndarray:
        cols = self.column_probas(dataset)
        if len(cols) == 1:
            return cols[0]
        # summed in parameter-name order so the mean is column-order invariant
        acc = np.zeros(cols.shape[1])
        for j in sorted(range(len(self.parameters)), key=lambda j: self.parameters[j]):
            acc = acc + cols[j]
        return acc / len(cols)

    def predict(self, dataset: Dataset) -> np.ndarray:
        return self.predict_proba(dataset) >= self.threshold

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "parameters": list(self.parameters),
            "seed": self.seed,
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MvTsfModel":
        return cls(MultivariateStrategy.parse(d["strategy"]), tuple(d["parameters"]),
                   tuple(TsfModel.from_dict(m) for m in d["models"]), int(d.get("seed", 0)))


def fit_multivariate(dataset: Dataset, strategy, hp: TsfHyperParams | None = None, seed: int = 0,
                     n_jobs: int = 1) -> MvTsfModel:
    strategy = MultivariateStrategy.parse(strategy)
    hp = TsfHyperParams() if hp is None else hp
    seed = check_seed(seed)
    if not len(dataset):
        raise DataError("cannot fit on an empty dataset")
    params = dataset.parameters
    cube = dataset.array()
    y = dataset.is_xm
    if strategy is MultivariateStrategy.COLUMN_CONCATENATION:
        models = (fit_tsf(cube.reshape(len(cube), -1), y, hp, seed, n_jobs),)
    else:
        models = tuple(
            fit_tsf(cube[:, j, :], y, hp, member_seed(seed, params, p), n_jobs) for j, p in enumerate(params)
        )
    return MvTsfModel(strategy, params, models, seed)


def predict_proba_mv(model: MvTsfModel, instance: TimeSeriesInstance) -> float:
    if set(instance.parameters) != set(model.parameters):
        raise SchemaMismatchError(
            f"instance {instance.id!r} has parameters {sorted(instance.parameters)}, "
            f"model expects {list(model.parameters)}"
        )
    ds = Dataset(model.parameters, [instance])
    return float(model.predict_proba(ds)[0])


def build_meta_features(base_models: Sequence[MvTsfModel], dataset: Dataset) -> np.ndarray:
    """Matrix of base-model XM probabilities, one row per instance, one column per model."""
    if not base_models:
        raise ConfigError("need at least one base model")
    out = np.zeros((len(dataset), len(base_models)))
    for j, m in enumerate(base_models):
        m.check_schema(dataset)
        if len(dataset):
            out[:, j] = m.predict_proba(dataset)
    return out


@dataclass(frozen=True)
class BaseSpec:
    strategy: MultivariateStrategy
    hyperparams: TsfHyperParams
    seed: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "BaseSpec":
        d = dict(d)
        strategy = MultivariateStrategy.parse(d.pop("strategy"))
        seed = d.pop("seed", None)
        if "estimators" in d:
            d["n_estimators"] = d.pop("estimators")
        if "depth" in d:
            d["max_depth"] = d.pop("depth")
        return cls(strategy, TsfHyperParams.from_dict(d), seed)

    def to_dict(self) -> dict:
        return {"strategy": self.strategy.value, **self.hyperparams.to_dict(), "seed": self.seed}


@dataclass(frozen=True)
class MetaParams:
    max_depth: int = 3
    class_weights: ClassWeights = ClassWeights()
    min_leaf: int = 1
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "class_weights", ClassWeights.parse(self.class_weights))
        if int(self.max_depth) < 1 or int(self.min_leaf) < 1:
            raise ConfigError("meta max_depth and min_leaf must be positive")
        if not 0.0 < float(self.threshold) < 1.0:
            raise ConfigError("meta threshold must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {"max_depth": self.max_depth, "class_weights": self.class_weights.as_list(),
                "min_leaf": self.min_leaf, "threshold": self.threshold}

    @classmethod
    def from_dict(cls, d: dict) -> "MetaParams":
        return cls(**d)


# Four base learners of the homogeneous ensemble: both strategies at two sizes.
DEFAULT_BASE_SPECS = tuple(
    BaseSpec(s, TsfHyperParams(n_estimators=n, max_depth=d, class_weights=ClassWeights(0.33, 0.67)))
    for s in (MultivariateStrategy.COLUMN_CONCATENATION, MultivariateStrategy.COLUMN_ENSEMBLE)
    for n, d in ((50, 3), (250, 6))
)


@dataclass(frozen=True, eq=False)
class StackingEnsemble:
    base_specs: tuple[BaseSpec, ...]
    base_models: tuple[MvTsfModel, ...]
    meta_tree: DecisionTree
    meta_params: MetaParams
    seed: int = 0

    @property
    def parameters(self) -> tuple[str, ...]:
        return self.base_models[0].parameters

    @property
    def threshold(self) -> float:
        return self.meta_params.threshold

    def predict_proba(self, dataset: Dataset) -> np.ndarray:
        meta = build_meta_features(self.base_models, dataset)
        if not len(dataset):
            return np.zeros(0)
        return self.meta_tree.predict_proba(meta)

    def predict(self, dataset: Dataset) -> np.ndarray:
        return self.predict_proba(dataset) >= self.threshold

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "base_specs": [s.to_dict() for s in self.base_specs],
            "base_models": [m.to_dict() for m in self.base_models],
            "meta_params": self.meta_params.to_dict(),
            "meta_tree": self.meta_tree.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StackingEnsemble":
        return cls(
            tuple(BaseSpec.from_dict(s) for s in d["base_specs"]),
            tuple(MvTsfModel.from_dict(m) for m in d["base_models"]),
            DecisionTree.from_dict(d["meta_tree"]),
            MetaParams.from_dict(d["meta_params"]),
            int(d.get("seed", 0)),
        )


def fit_stacking(base_specs: Sequence[BaseSpec], train_base: Dataset, train_meta: Dataset,
                 meta_hp: MetaParams | dict | None = None, seed: int = 0, n_jobs: int = 1) -> StackingEnsemble:
    """Fit base forests on ``train_base`` and a meta tree on their probabilities over ``train_meta``.

    The two training sets must not share a partition.
    """
    seed = check_seed(seed)
    if not base_specs:
        raise ConfigError("stacking needs at least one base specification")
    if meta_hp is None:
        meta_hp = MetaParams()
    elif isinstance(meta_hp, dict):
        meta_hp = MetaParams.from_dict(meta_hp)
    overlap = set(train_base.partitions) & set(train_meta.partitions)
    if overlap:
        raise PartitionOverlapError(f"base and meta training sets share partition(s) {sorted(overlap)}")
    if train_base.parameters != train_meta.parameters:
        raise SchemaMismatchError("base and meta training sets have different parameters")
    if not len(train_meta):
        raise DataError("meta training set is empty")
    specs = []
    models = []
    for i, spec in enumerate(base_specs):
        if isinstance(spec, dict):
            spec = BaseSpec.from_dict(spec)
        s = mix(seed, i) if spec.seed is None else check_seed(spec.seed)
        spec = BaseSpec(spec.strategy, spec.hyperparams, s)
        specs.append(spec)
        models.append(fit_multivariate(train_base, spec.strategy, spec.hyperparams, s, n_jobs))
    meta_x = build_meta_features(models, train_meta)
    meta_tree = fit_tree(meta_x, train_meta.is_xm, meta_hp.class_weights, meta_hp.max_depth,
                         meta_hp.min_leaf, mix(seed, "meta"))
    return StackingEnsemble(tuple(specs), tuple(models), meta_tree, meta_hp, seed)
