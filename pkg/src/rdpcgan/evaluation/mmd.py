"""Unbiased maximum mean discrepancy with a Gaussian kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError


@dataclass(frozen=True)
class MmdReport:
    statistic: float
    bandwidth: float
    sample_sizes: tuple[int, int]

    def to_dict(self) -> dict:
        return {"mmd_squared": self.statistic, "bandwidth": self.bandwidth,
                "sample_sizes": list(self.sample_sizes)}


def _sq_dists(a: np.ndarray, b: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.empty((len(a), len(b)))
    bb = (b * b).sum(axis=1)
    for start in range(0, len(a), chunk):
        block = a[start:start + chunk]
        d = (block * block).sum(axis=1)[:, None] + bb[None, :] - 2.0 * block @ b.T
        np.maximum(d, 0.0, out=d)
        out[start:start + chunk] = d
    return out


def median_bandwidth(pooled: np.ndarray, cap: int = 2000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance of the pooled sample.

    Falls back to 1.0 when the median is zero (all points identical).
    Large pools are subsampled deterministically to bound the quadratic
    cost.
    """
    if len(pooled) > cap:
        idx = np.random.default_rng(seed).choice(len(pooled), cap, replace=False)
        pooled = pooled[idx]
    d = np.sqrt(_sq_dists(pooled, pooled))
    upper = d[np.triu_indices(len(pooled), k=1)]
    med = float(np.median(upper)) if upper.size else 0.0
    return med if med > 0 else 1.0


def mmd_squared(sample_a: np.ndarray, sample_b: np.ndarray,
                bandwidth: float | str = "median") -> MmdReport:
    """Unbiased MMD^2 estimate between two samples.

    Gaussian kernel k(x, y) = exp(-||x - y||^2 / (2 h^2)); h is the
    median heuristic on the pooled sample unless a fixed value is given.
    The unbiased estimator can dip slightly below zero.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("mmd_squared expects 2-d sample matrices")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"feature widths differ: {a.shape[1]} vs {b.shape[1]}")
    m, n = len(a), len(b)
    if m < 2 or n < 2:
        raise ShapeError("mmd_squared needs at least 2 rows per sample")
    if bandwidth == "median":
        h = median_bandwidth(np.concatenate([a, b], axis=0))
    else:
        h = float(bandwidth)
        if h <= 0:
            raise ShapeError(f"bandwidth {h} must be > 0")
    gamma = 1.0 / (2.0 * h * h)

    kaa = np.exp(-gamma * _sq_dists(a, a))
    kbb = np.exp(-gamma * _sq_dists(b, b))
    kab = np.exp(-gamma * _sq_dists(a, b))
    term_a = (kaa.sum() - np.trace(kaa)) / (m * (m - 1))
    term_b = (kbb.sum() - np.trace(kbb)) / (n * (n - 1))
    cross = 2.0 * kab.mean()
    return MmdReport(float(term_a + term_b - cross), h, (m, n))
