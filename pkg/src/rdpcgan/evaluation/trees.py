"""In-repo CART decision tree (Gini) and a bagged forest.

Binary classification only: labels must be 0/1. Split search is fully
deterministic (features in index order, thresholds at midpoints of
consecutive distinct values, first strict improvement wins); the seed
only drives the forest's bootstrap and feature subsampling.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import DataError


def _gini(pos: float, total: float) -> float:
    if total == 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, feature_ids):
    """Return (feature, threshold, gain) or None if nothing improves."""
    n = len(y)
    total_pos = float(y.sum())
    parent = _gini(total_pos, n)
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        distinct = np.flatnonzero(np.diff(xs) > 0)
        if distinct.size == 0:
            continue
        cum_pos = np.cumsum(ys)
        left_n = distinct + 1.0
        left_pos = cum_pos[distinct]
        right_n = n - left_n
        right_pos = total_pos - left_pos
        p_l = left_pos / left_n
        p_r = right_pos / right_n
        children = (left_n * 2 * p_l * (1 - p_l) + right_n * 2 * p_r * (1 - p_r)) / n
        gains = parent - children
        k = int(np.argmax(gains))
        if gains[k] > 1e-12 and (best is None or gains[k] > best[2] + 1e-12):
            threshold = 0.5 * (xs[distinct[k]] + xs[distinct[k] + 1])
            best = (f, float(threshold), float(gains[k]))
    return best


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "score")

    def __init__(self, score, feature=None, threshold=None, left=None, right=None):
        self.score = score
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class DecisionTree:
    """CART classifier; scores are leaf positive-class frequencies."""

    def __init__(self, max_depth: int = 6, min_samples_split: int = 2, seed: int = 0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed
        self._root: _Node | None = None
        self._features: np.ndarray | None = None

    def fit(self, X, y, feature_ids=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if set(np.unique(y)) - {0, 1}:
            raise DataError(f"labels must be 0/1, got {sorted(np.unique(y))}")
        if len(np.unique(y)) < 2:
            raise DataError("need at least 2 classes to fit a classifier")
        if feature_ids is None:
            feature_ids = np.arange(X.shape[1])
        self._features = np.asarray(feature_ids)
        self._root = self._grow(X, y.astype(float), 0)
        return self

    def _grow(self, X, y, depth) -> _Node:
        score = float(y.mean())
        if depth >= self.max_depth or len(y) < self.min_samples_split or score in (0.0, 1.0):
            return _Node(score)
        found = _best_split(X, y, self._features)
        if found is None:
            return _Node(score)
        f, threshold, _ = found
        mask = X[:, f] <= threshold
        return _Node(score, f, threshold,
                     self._grow(X[mask], y[mask], depth + 1),
                     self._grow(X[~mask], y[~mask], depth + 1))

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        for i, row in enumerate(X):
            node = self._root
            while node.feature is not None:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.score
        return out

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) > 0.5).astype(int)


class RandomForest:
    """Bagged CART trees; score is the fraction of trees voting positive."""

    def __init__(self, n_trees: int = 10, max_depth: int = 6, feature_frac: float = 1.0,
                 bootstrap: bool = True, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.feature_frac = feature_frac
        self.bootstrap = bootstrap
        self.seed = seed
        self._trees: list[DecisionTree] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if len(np.unique(y)) < 2:
            raise DataError("need at least 2 classes to fit a classifier")
        rng = np.random.default_rng(self.seed)
        n, d = X.shape
        k = max(1, int(round(self.feature_frac * d)))
        self._trees = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            feats = np.sort(rng.choice(d, size=k, replace=False))
            yb = y[idx]
            if len(np.unique(yb)) < 2:
                # degenerate bootstrap: fall back to the full sample
                idx = np.arange(n)
                yb = y
            tree = DecisionTree(self.max_depth)
            tree.fit(X[idx], yb, feature_ids=feats)
            self._trees.append(tree)
        return self

    def predict_score(self, X) -> np.ndarray:
        votes = np.stack([t.predict(X) for t in self._trees])
        return votes.mean(axis=0)

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) > 0.5).astype(int)


def fit_tree(features, labels, max_depth: int = 6, seed: int = 0) -> DecisionTree:
    return DecisionTree(max_depth=max_depth, seed=seed).fit(features, labels)


def fit_forest(features, labels, max_depth: int = 6, seed: int = 0,
               n_trees: int = 10, feature_frac: float = 1.0,
               bootstrap: bool = True) -> RandomForest:
    return RandomForest(n_trees=n_trees, max_depth=max_depth, feature_frac=feature_frac,
                        bootstrap=bootstrap, seed=seed).fit(features, labels)
