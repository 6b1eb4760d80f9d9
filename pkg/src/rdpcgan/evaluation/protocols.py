"""Utility protocols: dimension-wise prediction and train-on-synthetic /
test-on-real (TSTR)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DataError
from .metrics import auprc, auroc, f1
from .trees import fit_forest, fit_tree

CLASSIFIER_KINDS = ("tree", "forest")


@dataclass
class UtilityReport:
    per_feature_f1: dict[int, float] = field(default_factory=dict)
    mean_f1: float = float("nan")
    auroc_mean: float = float("nan")
    auroc_std: float = float("nan")
    auprc_mean: float = float("nan")
    auprc_std: float = float("nan")
    classifier: str = ""
    seeds: tuple[int, ...] = ()
    skipped_features: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        out = {"classifier": self.classifier, "seeds": list(self.seeds)}
        if self.per_feature_f1:
            out["per_feature_f1"] = {str(k): v for k, v in self.per_feature_f1.items()}
            out["mean_f1"] = self.mean_f1
            out["skipped_features"] = list(self.skipped_features)
        if not np.isnan(self.auroc_mean):
            out["auroc"] = {"mean": self.auroc_mean, "std": self.auroc_std}
            out["auprc"] = {"mean": self.auprc_mean, "std": self.auprc_std}
        return out


def _matrix(data) -> np.ndarray:
    features = getattr(data, "features", None)
    return np.asarray(features if features is not None else data, dtype=float)


def top_k_features(train: np.ndarray, k: int) -> list[int]:
    """Indices of the k most frequent (most often 1) features."""
    freq = train.mean(axis=0)
    order = np.argsort(-freq, kind="stable")
    return [int(i) for i in order[:k]]


def _fit(kind: str, X, y, seed: int, max_depth: int, n_trees: int):
    if kind == "tree":
        return fit_tree(X, y, max_depth=max_depth, seed=seed)
    if kind == "forest":
        return fit_forest(X, y, max_depth=max_depth, seed=seed, n_trees=n_trees)
    raise DataError(f"unknown classifier kind {kind!r}")


def dimension_wise_prediction(synth_train, real_test, top_k: int = 10,
                              seeds: tuple[int, ...] = (0,),
                              classifiers: tuple[str, ...] = CLASSIFIER_KINDS,
                              max_depth: int = 6, n_trees: int = 10,
                              features: list[int] | None = None) -> UtilityReport:
    """Hold out one feature at a time, predict it from the rest.

    Classifiers are trained on the (synthetic) training matrix and scored
    by F1 against the real test matrix. Features are the top_k most
    frequent in the training matrix unless an explicit list is given (use
    one list when comparing synthetic against a real-data baseline).
    Held-out features that are single-valued on either side are skipped
    and reported.
    """
    train = _matrix(synth_train)
    test = _matrix(real_test)
    if train.shape[1] != test.shape[1]:
        raise DataError(f"feature widths differ: {train.shape[1]} vs {test.shape[1]}")
    if features is None:
        features = top_k_features(train, top_k)
    per_feature: dict[int, float] = {}
    skipped: list[int] = []
    rest_cols = np.arange(train.shape[1])
    for k in features:
        cols = rest_cols[rest_cols != k]
        y_train = (train[:, k] >= 0.5).astype(int)
        y_test = (test[:, k] >= 0.5).astype(int)
        if len(np.unique(y_train)) < 2 or len(np.unique(y_test)) < 2:
            skipped.append(int(k))
            continue
        scores = []
        for kind in classifiers:
            for seed in seeds:
                clf = _fit(kind, train[:, cols], y_train, seed, max_depth, n_trees)
                scores.append(f1(clf.predict(test[:, cols]), y_test))
        per_feature[int(k)] = float(np.mean(scores))
    mean = float(np.mean(list(per_feature.values()))) if per_feature else float("nan")
    return UtilityReport(per_feature_f1=per_feature, mean_f1=mean,
                         classifier="+".join(classifiers), seeds=tuple(seeds),
                         skipped_features=tuple(skipped))


def tstr_evaluate(synth_train, real_test, classifier: str = "forest", runs: int = 10,
                  seed: int = 0, max_depth: int = 6, n_trees: int = 10) -> UtilityReport:
    """Train on synthetic labeled data, test on real labeled data.

    Repeats ``runs`` fits with distinct classifier seeds and reports
    mean and standard deviation of AUROC/AUPRC.
    """
    X_train, y_train = _labeled(synth_train)
    X_test, y_test = _labeled(real_test)
    aurocs, auprcs = [], []
    for r in range(runs):
        clf = _fit(classifier, X_train, y_train, seed + r, max_depth, n_trees)
        s = clf.predict_score(X_test)
        aurocs.append(auroc(s, y_test))
        auprcs.append(auprc(s, y_test))
    return UtilityReport(
        auroc_mean=float(np.mean(aurocs)), auroc_std=float(np.std(aurocs)),
        auprc_mean=float(np.mean(auprcs)), auprc_std=float(np.std(auprcs)),
        classifier=classifier, seeds=tuple(range(seed, seed + runs)))


def _labeled(data) -> tuple[np.ndarray, np.ndarray]:
    labels = getattr(data, "labels", None)
    if labels is None:
        raise DataError("tstr_evaluate needs labeled datasets on both sides")
    return _matrix(data), np.asarray(labels, dtype=int)
