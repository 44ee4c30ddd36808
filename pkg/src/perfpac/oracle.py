"""Conditional-probability oracles ``x -> P[Y = 1 | x]``.

The forest is a plain bagged ensemble of Gini trees written in numpy; its
probability is the mean over trees of the positive-class fraction at the leaf.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, DomainError, EmptyDataset, SingleClassDataset

FOREST_FORMAT = "perfpac-forest/1"


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1 / (1 + e), e / (1 + e))


@dataclass(frozen=True)
class ProbOracle:
    fn: Callable
    provenance: str  # "exact-synthetic" | "forest" | "constant"

    def __call__(self, X):
        return np.clip(np.asarray(self.fn(np.asarray(X, dtype=float)), dtype=float), 0.0, 1.0)


def _synthetic_p(X):
    if X.ndim != 2 or X.shape[1] != 2:
        raise DimensionMismatch(f"synthetic oracle expects (n, 2) inputs, got {X.shape}")
    return sigmoid(0.5 * X[:, 1] - 0.2 * X[:, 0] ** 2)


def synthetic_oracle() -> ProbOracle:
    """Exact ``sigmoid(0.5 * x2 - 0.2 * x1**2)``."""
    return ProbOracle(_synthetic_p, "exact-synthetic")


def constant_oracle(p: float) -> ProbOracle:
    return ProbOracle(lambda X: np.full(len(X), float(p)), "constant")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 18
    max_depth: int = 8
    bootstrap: bool = True
    max_features: Optional[int] = None  # None -> ceil(sqrt(d))
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise DomainError("n_trees, max_depth and min_samples_leaf must be >= 1")


class Tree:
    """Flat-array binary tree; ``feature[k] == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    def predict(self, X):
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            idx = np.nonzero(inner)[0]
            go_left = X[idx, f[idx]] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])

    def to_nested(self, k=0):
        if self.feature[k] < 0:
            return {"leaf": float(self.value[k])}
        return {
            "feature": int(self.feature[k]),
            "threshold": float(self.threshold[k]),
            "left": self.to_nested(int(self.left[k])),
            "right": self.to_nested(int(self.right[k])),
        }

    @classmethod
    def from_nested(cls, node):
        feature, threshold, left, right, value = [], [], [], [], []

        def add(nd):
            k = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(nd.get("leaf", 0.0))
            if "leaf" not in nd:
                feature[k] = nd["feature"]
                threshold[k] = nd["threshold"]
                left[k] = add(nd["left"])
                right[k] = add(nd["right"])
            return k

        add(node)
        return cls(feature, threshold, left, right, value)


def _best_split(x, pos, min_leaf):
    """Lowest weighted Gini split of one feature; returns ``(impurity, threshold)`` or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ps = pos[order]
    n = len(xs)
    # candidate cut after position i (left = first i+1 points) where the value changes
    cut = np.nonzero(xs[1:] > xs[:-1])[0]
    if cut.size == 0:
        return None
    n_left = cut + 1
    ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    cut, n_left = cut[ok], n_left[ok]
    if cut.size == 0:
        return None
    cum = np.cumsum(ps)
    pos_left = cum[cut]
    pos_right = cum[-1] - pos_left
    n_right = n - n_left
    gini_left = 2 * pos_left * (n_left - pos_left) / n_left
    gini_right = 2 * pos_right * (n_right - pos_right) / n_right
    imp = (gini_left + gini_right) / n
    k = int(np.argmin(imp))
    return float(imp[k]), float((xs[cut[k]] + xs[cut[k] + 1]) / 2)


def fit_tree(X, pos, max_depth, max_features, min_leaf, rng) -> Tree:
    d = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx, depth):
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        frac = float(pos[idx].mean())
        value.append(frac)
        if depth >= max_depth or frac in (0.0, 1.0) or len(idx) < 2 * min_leaf:
            return k
        feats = np.sort(rng.choice(d, size=max_features, replace=False))
        best = None
        for j in feats:
            res = _best_split(X[idx, j], pos[idx], min_leaf)
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], int(j), res[1])
        if best is None:
            return k
        _, j, t = best
        mask = X[idx, j] <= t
        feature[k] = j
        threshold[k] = t
        left[k] = grow(idx[mask], depth + 1)
        right[k] = grow(idx[~mask], depth + 1)
        return k

    grow(np.arange(len(pos)), 0)
    return Tree(feature, threshold, left, right, value)


class Forest:
    def __init__(self, trees, config: ForestConfig, n_features: int):
        self.trees = trees
        self.config = config
        self.n_features = n_features

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected (n, {self.n_features}) inputs, got {X.shape}")
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def oracle(self) -> ProbOracle:
        return ProbOracle(self.predict_proba, "forest")

    def to_dict(self):
        return {
            "format": FOREST_FORMAT,
            "config": asdict(self.config),
            "n_features": self.n_features,
            "trees": [t.to_nested() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FOREST_FORMAT:
            raise DomainError(f"unsupported forest format {d.get('format')!r}")
        return cls([Tree.from_nested(t) for t in d["trees"]], ForestConfig(**d["config"]), d["n_features"])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_forest(X, y, config: ForestConfig = ForestConfig()) -> Forest:
    """Bagged Gini trees on +/-1 labels.

    Rows are put in a canonical order before bootstrapping, so the fit does
    not depend on the order of the input rows.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(y) == 0:
        raise EmptyDataset("cannot fit a forest on an empty dataset")
    if np.unique(y).size < 2:
        raise SingleClassDataset("forest needs both classes")
    canon = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, pos = X[canon], (y[canon] == 1).astype(float)
    n, d = X.shape
    max_features = config.max_features or math.ceil(math.sqrt(d))
    max_features = min(max_features, d)
    trees = []
    for t in range(config.n_trees):
        rng = np.random.default_rng([config.seed, t])
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        trees.append(fit_tree(X[idx], pos[idx], config.max_depth, max_features,
                              config.min_samples_leaf, rng))
    return Forest(trees, config, d)
