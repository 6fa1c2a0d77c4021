"""Partition agreement, outlier error rates and a trimmed k-means baseline."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .oclust import OUTLIER

TKMEANS_STARTS = 10
TKMEANS_MAX_ITER = 200


@dataclass(frozen=True)
class OutlierRates:
    false_positive_rate: float
    false_negative_rate: Optional[float]


@dataclass(frozen=True)
class ContingencyTable:
    rows: np.ndarray
    cols: np.ndarray
    counts: np.ndarray


def confusion_matrix(truth, pred) -> ContingencyTable:
    """Cross-tabulate two labelings; ``counts[i, j]`` pairs ``rows[i]`` with ``cols[j]``."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape:
        raise ValueError("partitions must have the same length")
    rows, ti = np.unique(truth, return_inverse=True)
    cols, pi = np.unique(pred, return_inverse=True)
    counts = np.zeros((rows.size, cols.size), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return ContingencyTable(rows, cols, counts)


def ari(a, b) -> float:
    """Hubert-Arabie adjusted Rand index, pair counts in exact integers."""
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("empty partitions")
    table = confusion_matrix(a, b).counts
    n = int(a.size)
    sum_cells = sum(comb(int(v), 2) for v in table.ravel())
    sum_rows = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_cols = sum(comb(int(v), 2) for v in table.sum(axis=0))
    total = comb(n, 2)
    if total == 0:
        return 1.0
    # (index - expected) / (max - expected), scaled by total to stay integral
    num = total * sum_cells - sum_rows * sum_cols
    den = total * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols
    if den == 0:
        # both partitions trivial (all one class, or all singletons)
        return 1.0
    return 2.0 * num / den


def outlier_rates(truth, pred, outlier=OUTLIER) -> OutlierRates:
    truth = np.asarray(truth) == outlier
    pred = np.asarray(pred) == outlier
    if truth.shape != pred.shape:
        raise ValueError("partitions must have the same length")
    n_good = int((~truth).sum())
    fp = float((pred & ~truth).sum() / n_good) if n_good else 0.0
    fn = float((~pred & truth).sum() / truth.sum()) if truth.any() else None
    return OutlierRates(fp, fn)


def _tkmeans_once(X, G, n_trim, rng, max_iter):
    n = X.shape[0]
    centers = X[rng.choice(n, size=G, replace=False)].copy()
    labels = None
    trimmed = np.zeros(n, dtype=bool)
    history = []
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None]) ** 2).sum(-1)
        new = d2.argmin(axis=1)
        dist = d2[np.arange(n), new]
        new_trim = np.zeros(n, dtype=bool)
        if n_trim:
            new_trim[np.argsort(dist, kind="stable")[n - n_trim:]] = True
        history.append(dist[~new_trim].sum())
        if labels is not None and np.array_equal(new, labels) and \
                np.array_equal(new_trim, trimmed):
            break
        labels, trimmed = new, new_trim
        for g in range(G):
            members = (labels == g) & ~trimmed
            if not members.any():
                return None
            centers[g] = X[members].mean(axis=0)
    return labels, trimmed, history[-1], np.asarray(history)


def trimmed_kmeans(coefs, G: int, n_trim: int, seed: int = 0,
                   n_starts: int = TKMEANS_STARTS, max_iter: int = TKMEANS_MAX_ITER,
                   return_history: bool = False):
    """Trimmed k-means: labels ``1..G``, with the ``n_trim`` trimmed rows as OUTLIER.

    Each start alternates nearest-centroid assignment, trimming the
    ``n_trim`` rows farthest from their centroid, and recomputing centroids
    from the untrimmed rows. The start with the lowest trimmed
    within-cluster sum of squares wins.
    """
    X = np.asarray(coefs, dtype=float)
    n = X.shape[0]
    if G < 1 or n_trim < 0 or n_trim >= n - G:
        raise ValueError(f"need 0 <= n_trim < n - G (n={n}, G={G}, n_trim={n_trim})")
    rng = np.random.default_rng(seed)
    best = None
    attempts = 0
    while attempts < 10 * n_starts and (best is None or attempts < n_starts):
        attempts += 1
        res = _tkmeans_once(X, G, n_trim, rng, max_iter)
        if res is not None and (best is None or res[2] < best[2]):
            best = res
    if best is None:
        raise RuntimeError("trimmed k-means produced an empty cluster on every start")
    labels = best[0] + 1
    labels[best[1]] = OUTLIER
    if return_history:
        return labels, best[3]
    return labels
