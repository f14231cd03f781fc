"""Class-weighted binary CART tree (Gini impurity).

Nodes are stored in flat arrays in depth-first pre-order, left child first.
Rows with ``feature <= threshold`` go left. Split search is delegated to the
compiled kernel when available.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import BinaryLabel
from .errors import ConfigError, DataError

LEAF = -1


@dataclass(frozen=True)
class ClassWeights:
    w_xm: float = 1.0
    w_cbn: float = 1.0

    def __post_init__(self):
        for name in ("w_xm", "w_cbn"):
            v = float(getattr(self, name))
            if not (v > 0 and np.isfinite(v)):
                raise ConfigError(f"class weight {name} must be a positive finite number, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def parse(cls, value) -> "ClassWeights":
        """Accept a ClassWeights, a pair, or text like ``"0.33,0.67"`` / ``"1:0.5"``."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            parts = value.replace(":", ",").split(",")
        else:
            parts = list(value)
        if len(parts) != 2:
            raise ConfigError(f"class weights need exactly two values (XM, CBN), got {value!r}")
        try:
            return cls(float(parts[0]), float(parts[1]))
        except (TypeError, ValueError):
            raise ConfigError(f"cannot parse class weights {value!r}") from None

    def as_list(self) -> list[float]:
        return [self.w_xm, self.w_cbn]


def weighted_gini(n_xm, n_cbn, weights: ClassWeights) -> float:
    """Class-weighted Gini impurity of a node with the given raw counts."""
    wx = weights.w_xm * n_xm
    wc = weights.w_cbn * n_cbn
    total = wx + wc
    if total == 0:
        return 0.0
    return 1.0 - (wx / total) ** 2 - (wc / total) ** 2


def as_is_xm(labels) -> np.ndarray:
    """Boolean positive-class mask from BinaryLabel values, strings or booleans."""
    arr = np.asarray(labels)
    if arr.dtype == bool:
        return arr.copy()
    return np.array([BinaryLabel.parse(x) is BinaryLabel.XM for x in labels], dtype=bool)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    xm_weight: np.ndarray
    cbn_weight: np.ndarray
    max_depth: int
    n_features: int
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        for name, dtype in (("feature", np.int64), ("threshold", np.float64), ("left", np.int64),
                            ("right", np.int64), ("xm_weight", np.float64), ("cbn_weight", np.float64)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature == LEAF).sum())

    def depth(self) -> int:
        """Longest root-to-leaf path, counted in splits."""
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] == LEAF:
                best = max(best, d)
            else:
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected rows with {self.n_features} features, got shape {X.shape}")
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            active = f != LEAF
            if not active.any():
                return node
            r = rows[active]
            n = node[active]
            go_left = X[r, f[active]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])

    def predict_proba(self, X) -> np.ndarray:
        """XM probability of every row: leaf xm weight over total leaf weight."""
        leaf = self.apply(X)
        vx = self.xm_weight[leaf]
        return vx / (vx + self.cbn_weight[leaf])

    def structure_equal(self, other: "DecisionTree") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "xm_weight", "cbn_weight")
        ) and (self.max_depth, self.n_features) == (other.max_depth, other.n_features)

    def to_dict(self) -> dict:
        def node(i):
            if self.feature[i] == LEAF:
                return {"leaf": [float(self.xm_weight[i]), float(self.cbn_weight[i])]}
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": node(int(self.left[i])),
                "right": node(int(self.right[i])),
            }

        return {
            "max_depth": self.max_depth,
            "n_features": self.n_features,
            "min_leaf": self.min_leaf,
            "seed": self.seed,
            "root": node(0),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "xm_weight", "cbn_weight")}

        def add(n):
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(0)
            if "leaf" in n:
                xm, cbn = (float(v) for v in n["leaf"])
                cols["feature"][i] = LEAF
                cols["left"][i] = cols["right"][i] = LEAF
                cols["xm_weight"][i], cols["cbn_weight"][i] = xm, cbn
            else:
                cols["feature"][i] = int(n["feature"])
                cols["threshold"][i] = float(n["threshold"])
                cols["left"][i] = add(n["left"])
                cols["right"][i] = add(n["right"])
            return i

        add(d["root"])
        return cls(**cols, max_depth=int(d["max_depth"]), n_features=int(d["n_features"]),
                   min_leaf=int(d.get("min_leaf", 1)), seed=int(d.get("seed", 0)))


def fit_tree(features, labels, weights: ClassWeights | None = None, max_depth: int = 5,
             min_leaf: int = 1, rng_seed: int = 0) -> DecisionTree:
    """Grow a tree greedily by class-weighted Gini.

    Candidate thresholds are midpoints between consecutive distinct values.
    Growth stops at ``max_depth``, at a pure node, or when a node has fewer
    than ``2 * min_leaf`` rows. Equal-impurity candidates resolve to the
    lowest feature index, then the lowest threshold. No randomness is used;
    ``rng_seed`` is recorded for provenance only.
    """
    weights = ClassWeights() if weights is None else ClassWeights.parse(weights)
    if max_depth < 1:
        raise ConfigError(f"max_depth must be positive, got {max_depth}")
    if min_leaf < 1:
        raise ConfigError(f"min_leaf must be positive, got {min_leaf}")
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("cannot fit a tree on an empty training set")
    if X.shape[1] == 0:
        raise DataError("training rows have no features")
    y = as_is_xm(labels)
    if len(y) != len(X):
        raise DataError(f"{len(X)} feature rows but {len(y)} labels")
    if not np.isfinite(X).all():
        raise DataError("training features contain non-finite values")
    y8 = y.astype(np.uint8)

    cols = {k: [] for k in ("feature", "threshold", "left", "right", "xm_weight", "cbn_weight")}

    def new_node():
        for k in cols:
            cols[k].append(0)
        return len(cols["feature"]) - 1

    def build(rows, depth):
        i = new_node()
        nx = int(y8[rows].sum())
        nc = len(rows) - nx
        f = LEAF
        if depth < max_depth and nx and nc and len(rows) >= 2 * min_leaf:
            f, thr, _ = _kernels.best_split(X, y8, rows, weights.w_xm, weights.w_cbn, min_leaf)
        if f == LEAF:
            cols["feature"][i] = LEAF
            cols["left"][i] = cols["right"][i] = LEAF
            cols["xm_weight"][i] = weights.w_xm * nx
            cols["cbn_weight"][i] = weights.w_cbn * nc
            return i
        go_left = X[rows, f] <= thr
        cols["feature"][i] = int(f)
        cols["threshold"][i] = float(thr)
        cols["left"][i] = build(rows[go_left], depth + 1)
        cols["right"][i] = build(rows[~go_left], depth + 1)
        return i

    build(np.arange(len(X), dtype=np.intp), 0)
    return DecisionTree(**cols, max_depth=int(max_depth), n_features=X.shape[1],
                        min_leaf=int(min_leaf), seed=int(rng_seed))


def predict_proba_tree(tree: DecisionTree, row) -> float:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or len(row) != tree.n_features:
        raise DataError(f"row has {row.size} features, tree expects {tree.n_features}")
    return float(tree.predict_proba(row[None, :])[0])
