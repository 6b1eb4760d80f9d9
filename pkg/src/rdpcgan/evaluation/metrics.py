"""Ranking and classification metrics: AUROC, AUPRC, F1."""

from __future__ import annotations

import numpy as np

from ..exceptions import DataError


def _check_binary_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if set(np.unique(labels)) - {0, 1}:
        raise DataError(f"labels must be 0/1, got {sorted(np.unique(labels))}")
    return labels


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their group average."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Area under the ROC curve via the rank statistic (ties averaged)."""
    labels = _check_binary_labels(labels)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("auroc needs at least one positive and one negative label")
    ranks = _average_ranks(scores)
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auprc(scores, labels) -> float:
    """Area under the precision-recall curve with step interpolation."""
    labels = _check_binary_labels(labels)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise DataError("auprc needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # evaluate only at the last index of each tied score group
    last = np.flatnonzero(np.append(np.diff(s) != 0, True))
    precision = tp[last] / (tp[last] + fp[last])
    recall = tp[last] / n_pos
    area = 0.0
    prev_recall = 0.0
    for p, r in zip(precision, recall):
        area += (r - prev_recall) * p
        prev_recall = r
    return float(area)


def f1(pred, labels) -> float:
    """F1 for binary predictions; 0 when there are no predicted or true positives."""
    labels = _check_binary_labels(labels)
    pred = _check_binary_labels(pred)
    tp = int(np.sum((pred == 1) & (labels == 1)))
    fp = int(np.sum((pred == 1) & (labels == 0)))
    fn = int(np.sum((pred == 0) & (labels == 1)))
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0
