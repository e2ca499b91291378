"""Downstream predictors and the train/test protocol harness.

Two deliberately dependency-free trainers: a primal subgradient linear SVM
(hinge objective (1/2)||w||^2 + C * mean hinge, step 1/t) and a greedy
Gini decision tree with midpoint thresholds. Both are deterministic under a
seed. Classifiers only ever see X, which by construction excludes the
protected attribute and the decision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EncodedDataset, split
from .metrics import risk_difference_classifier

SETTINGS = ("REAL2REAL", "SYN2SYN", "SYN2REAL")
CLASSIFIERS = ("svm", "tree")


@dataclass(frozen=True)
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    C: float


@dataclass(frozen=True)
class TreeNode:
    column: int | None  # None marks a leaf
    threshold: float | None
    left: "TreeNode | None"
    right: "TreeNode | None"
    label: int | None


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    max_depth: int
    n_features: int


@dataclass(frozen=True)
class EvalResult:
    setting: str
    classifier: str
    accuracy: float
    risk_difference: float


def train_linear_svm(X, y, C: float, rng: np.random.Generator) -> LinearSvmModel:
    """Primal stochastic subgradient descent on the hinge objective.

    Minimises (reg/2)||w||^2 + C * mean hinge with reg = 1/n, which makes
    C=1 equivalent to the conventional ||w||^2/2 + C * sum-of-hinges SVM.
    50 shuffled epochs with step 1/(reg * t) at global step t; the bias is
    unregularised. Requires both classes present; deterministic under rng.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) < 2:
        raise ValueError("need at least 2 samples")
    if len(np.unique(y)) < 2:
        raise ValueError("training labels are single-class")
    ypm = np.where(y == 1, 1.0, -1.0)
    n, d = X.shape
    reg = 1.0 / n
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(50):
        for i in rng.permutation(n):
            t += 1
            # eta = 1/(reg*t); the weight decay eta*reg collapses to 1/t
            margin = ypm[i] * (X[i] @ w + b)
            w *= 1.0 - 1.0 / t
            if margin < 1.0:
                scale = C * ypm[i] / (reg * t)
                w += scale * X[i]
                b += scale
    return LinearSvmModel(w, float(b), C)


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _best_split(X: np.ndarray, y: np.ndarray):
    """Best (column, threshold) by Gini gain; ties keep the lowest column
    index and lowest threshold. Returns None when no split separates rows."""
    n = len(y)
    total = np.bincount(y, minlength=2).astype(float)
    parent = _gini(total)
    best = None
    best_gain = 0.0
    for col in range(X.shape[1]):
        order = np.argsort(X[:, col], kind="stable")
        vals = X[order, col]
        labels = y[order]
        distinct = np.flatnonzero(vals[1:] != vals[:-1])
        if distinct.size == 0:
            continue
        ones = np.cumsum(labels == 1).astype(float)
        left_n = (distinct + 1).astype(float)
        left_ones = ones[distinct]
        left_zeros = left_n - left_ones
        right_ones = total[1] - left_ones
        right_zeros = total[0] - left_zeros
        gl = 1.0 - ((left_ones / left_n) ** 2 + (left_zeros / left_n) ** 2)
        rn = n - left_n
        gr = 1.0 - ((right_ones / rn) ** 2 + (right_zeros / rn) ** 2)
        gains = parent - (left_n / n) * gl - (rn / n) * gr
        k = int(np.argmax(gains))  # first max: lowest threshold wins ties
        if gains[k] > best_gain:  # strict: earlier column wins ties
            thr = (vals[distinct[k]] + vals[distinct[k] + 1]) / 2.0
            best_gain, best = float(gains[k]), (col, float(thr))
    return best


def _grow(X, y, depth, max_depth) -> TreeNode:
    counts = np.bincount(y, minlength=2)
    majority = int(np.argmax(counts))  # tie goes to label 0
    if depth >= max_depth or counts[0] == 0 or counts[1] == 0 or len(y) < 2:
        return TreeNode(None, None, None, None, majority)
    found = _best_split(X, y)
    if found is None:
        return TreeNode(None, None, None, None, majority)
    col, thr = found
    mask = X[:, col] <= thr
    left = _grow(X[mask], y[mask], depth + 1, max_depth)
    right = _grow(X[~mask], y[~mask], depth + 1, max_depth)
    return TreeNode(col, thr, left, right, None)


def train_decision_tree(X, y, max_depth: int) -> DecisionTreeModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) < 1:
        raise ValueError("need at least 1 sample")
    return DecisionTreeModel(_grow(X, y, 0, max_depth), max_depth, X.shape[1])


def tree_depth(model: DecisionTreeModel) -> int:
    def walk(node):
        if node.column is None:
            return 0
        return 1 + max(walk(node.left), walk(node.right))

    return walk(model.root)


def predict(model, X) -> np.ndarray:
    """{0,1} predictions; SVM predicts 1 where w.x + b > 0."""
    X = np.asarray(X, dtype=float)
    if isinstance(model, LinearSvmModel):
        if X.shape[1] != model.weights.shape[0]:
            raise ValueError(f"expected {model.weights.shape[0]} features, got {X.shape[1]}")
        return (X @ model.weights + model.bias > 0.0).astype(np.int64)
    if isinstance(model, DecisionTreeModel):
        if X.shape[1] != model.n_features:
            raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
        out = np.zeros(len(X), dtype=np.int64)

        def walk(node, idx):
            if node.column is None:
                out[idx] = node.label
                return
            mask = X[idx, node.column] <= node.threshold
            walk(node.left, idx[mask])
            walk(node.right, idx[~mask])

        walk(model.root, np.arange(len(X)))
        return out
    raise TypeError(f"unknown model type {type(model)!r}")


def accuracy(model, X, y) -> float:
    if len(np.asarray(y)) == 0:
        raise ValueError("empty test set")
    return float(np.mean(predict(model, X) == np.asarray(y)))


def _train(tag: str, X, y, rng):
    if tag == "svm":
        return train_linear_svm(X, y, 1.0, rng)
    if tag == "tree":
        return train_decision_tree(X, y, 5)
    raise ValueError(f"classifier must be one of {CLASSIFIERS}")


def run_setting(
    setting: str,
    real: EncodedDataset,
    synthetic: EncodedDataset | None,
    classifier: str,
    rng: np.random.Generator,
) -> EvalResult:
    """One row of the protocol table.

    REAL2REAL splits the real data 1:1 and trains on the first half;
    SYN2SYN does the same on the synthetic data; SYN2REAL trains on the whole
    synthetic dataset and tests on the held-out real half (the same half
    REAL2REAL would test on under the same rng).
    """
    if setting not in SETTINGS:
        raise ValueError(f"setting must be one of {SETTINGS}")
    if setting != "REAL2REAL" and synthetic is None:
        raise ValueError(f"{setting} requires a synthetic dataset")
    if setting == "REAL2REAL":
        train_ds, test_ds = split(real, 0.5, rng)
    elif setting == "SYN2SYN":
        train_ds, test_ds = split(synthetic, 0.5, rng)
    else:
        _, test_ds = split(real, 0.5, rng)
        train_ds = synthetic
    model = _train(classifier, train_ds.X, train_ds.y, rng)
    return EvalResult(
        setting=setting,
        classifier=classifier,
        accuracy=accuracy(model, test_ds.X, test_ds.y),
        risk_difference=risk_difference_classifier(lambda X: predict(model, X), test_ds),
    )
