"""Gradient boosted regression trees with binary logistic loss."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .._accel import resolve_backend
from ._tree_kernels import KERNELS

MODEL_MAGIC = "robotsem-gbdt"
MODEL_VERSION = 1


class SingleClassInput(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GBDTParams:
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 5
    subsample: float = 1.0
    seed: int = 0


@dataclass
class Tree:
    """Preorder node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            rows = np.flatnonzero(inner)
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass
class GBDTModel:
    trees: list[Tree]
    learning_rate: float
    base_score: float
    feature_names: tuple[str, ...]
    params: GBDTParams
    train_loss: list[float] = field(default_factory=list)
    loss: str = "logistic"

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.feature_names):
            raise DimensionMismatch(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        raw = np.zeros(X.shape[0])
        for t in self.trees:
            raw += t.apply(X)
        return self.base_score + self.learning_rate * raw


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def logistic_loss(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean binary log-loss of raw scores."""
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def _leaf_value(y, raw, lr):
    """Newton step on the leaf's rows, halved until the leaf loss does not rise."""
    p = _sigmoid(raw)
    h = float(np.sum(p * (1.0 - p)))
    g = float(np.sum(y - p))
    if h < 1e-12 or g == 0.0:
        return 0.0
    v = g / h
    before = float(np.sum(np.logaddexp(0.0, raw) - y * raw))
    for _ in range(60):
        new = raw + lr * v
        if float(np.sum(np.logaddexp(0.0, new) - y * new)) <= before:
            return v
        v *= 0.5
    return 0.0


def _grow_tree(X, order, y, raw, rows_mask, params, split):
    """Splits come from the bagged rows; leaf values from every training row in the leaf.

    Fitting leaves on all rows keeps the backtracked Newton step a descent step
    for the full training loss, so subsampling cannot make the loss rise.
    """
    feature, threshold, value, left, right = [], [], [], [], []
    resid = y - _sigmoid(raw)

    def build(bag, reach, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        value.append(0.0)
        left.append(-1)
        right.append(-1)
        f = -1
        if depth < params.max_depth:
            f, thr, _ = split(X, order, bag, resid, params.min_leaf)
        if f < 0:
            idx = np.flatnonzero(reach)
            value[node] = _leaf_value(y[idx], raw[idx], params.learning_rate) if idx.size else 0.0
            return node
        go_left = X[:, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(bag & go_left, reach & go_left, depth + 1)
        right[node] = build(bag & ~go_left, reach & ~go_left, depth + 1)
        return node

    build(rows_mask, np.ones(len(y), dtype=bool), 0)
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(value),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64))


def train_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    params: GBDTParams = GBDTParams(),
    feature_names: Sequence[str] | None = None,
    backend: str | None = None,
) -> GBDTModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, n_feat = X.shape
    if n < 2 or len(np.unique(y)) < 2:
        raise SingleClassInput("training data needs at least two rows of both classes")
    if np.isnan(X).any():
        raise ValueError("impute missing values before training")
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(n_feat))
    split = KERNELS[resolve_backend(backend)]

    prior = float(y.mean())
    base = float(np.log(prior / (1.0 - prior)))
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T).astype(np.int64)
    rng = np.random.default_rng(params.seed)
    raw = np.full(n, base)
    trees: list[Tree] = []
    losses = [logistic_loss(y, raw)]
    full = np.ones(n, dtype=bool)
    for _ in range(params.n_trees):
        if params.subsample < 1.0:
            mask = np.zeros(n, dtype=bool)
            mask[rng.choice(n, size=max(1, int(round(params.subsample * n))), replace=False)] = True
        else:
            mask = full
        tree = _grow_tree(X, order, y, raw, mask, params, split)
        trees.append(tree)
        raw = raw + params.learning_rate * tree.apply(X)
        losses.append(logistic_loss(y, raw))
    return GBDTModel(trees, params.learning_rate, base, names, params, losses)


def predict_proba(model: GBDTModel, X: np.ndarray) -> np.ndarray:
    return _sigmoid(model.decision_function(X))


def predict(model: GBDTModel, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """1 (robot) where the probability is at least ``threshold``."""
    return (predict_proba(model, X) >= threshold).astype(np.int64)


# --------------------------------------------------------------------------
# persistence
#
#   robotsem-gbdt 1
#   loss=logistic n_trees=.. max_depth=.. learning_rate=.. min_leaf=.. subsample=.. seed=.. base_score=..
#   features=<comma-separated names>
#   per tree: "tree <i> <n_nodes>" then preorder nodes "<feature> <threshold> <value>"
#   (feature -1 = leaf; an internal node's left child follows it directly)


def save_gbdt(model: GBDTModel, path: str | Path) -> None:
    p = model.params
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
        fh.write(f"loss={model.loss} n_trees={model.n_trees} max_depth={p.max_depth} "
                 f"learning_rate={model.learning_rate!r} min_leaf={p.min_leaf} "
                 f"subsample={p.subsample!r} seed={p.seed} base_score={model.base_score!r}\n")
        fh.write("features=" + ",".join(model.feature_names) + "\n")
        for i, t in enumerate(model.trees):
            fh.write(f"tree {i} {t.n_nodes}\n")
            for f, thr, v in zip(t.feature, t.threshold, t.value):
                fh.write(f"{int(f)} {float(thr)!r} {float(v)!r}\n")


def load_gbdt(path: str | Path) -> GBDTModel:
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline().split()
        if magic[:1] != [MODEL_MAGIC] or int(magic[1]) != MODEL_VERSION:
            raise ValueError(f"{path}: not a version-{MODEL_VERSION} GBDT model")
        hdr = dict(kv.split("=", 1) for kv in fh.readline().split())
        names = tuple(fh.readline().rstrip("\n").split("=", 1)[1].split(","))
        trees = []
        for _ in range(int(hdr["n_trees"])):
            _, _, count = fh.readline().split()
            nodes = [fh.readline().split() for _ in range(int(count))]
            feat = np.array([int(a) for a, _, _ in nodes], dtype=np.int64)
            left = np.full(len(nodes), -1, dtype=np.int64)
            right = np.full(len(nodes), -1, dtype=np.int64)

            def link(i):
                if feat[i] < 0:
                    return i + 1
                left[i] = i + 1
                nxt = link(i + 1)
                right[i] = nxt
                return link(nxt)

            link(0)
            trees.append(Tree(feat, np.array([float(b) for _, b, _ in nodes]),
                              np.array([float(c) for _, _, c in nodes]), left, right))
    params = GBDTParams(int(hdr["n_trees"]), int(hdr["max_depth"]), float(hdr["learning_rate"]),
                        int(hdr["min_leaf"]), float(hdr["subsample"]), int(hdr["seed"]))
    return GBDTModel(trees, float(hdr["learning_rate"]), float(hdr["base_score"]), names, params,
                     loss=hdr["loss"])
