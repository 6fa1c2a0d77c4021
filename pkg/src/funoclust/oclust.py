"""Iterative outlier trimming for mixtures of B-spline coefficients.

Each iteration fits a Gaussian mixture to the retained coefficient rows,
refits it once per left-out row, compares the resulting log-likelihood
differences against their beta-mixture reference law, and removes the row
whose absence raises the log-likelihood most. The trimming depth with the
smallest KL divergence is selected at the end.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from .basis import CurveSet, KnotVector, eval_basis, fit_coefficients, make_knots
from .betadist import DEFAULT_BINS, BetaMixture, kl_divergence, mixture_from_stats
from .mixture import (EM_MAX_ITER, EM_TOL, N_STARTS, DegenerateFitError, GmmParams,
                      cluster_stats, em_batch, fit_gmm)

logger = logging.getLogger(__name__)

OUTLIER = 0
SUBSET_CHUNK = 64


class SubsetLogliks(NamedTuple):
    values: np.ndarray
    fallbacks: List[int]


@dataclass
class OclustResult:
    """Outcome of a trimming run.

    ``final_labels`` holds the cluster (``1..G``) of every original row, or
    :data:`OUTLIER` for rows removed up to ``best_iteration``.
    """

    kl_trace: np.ndarray
    removal_sequence: np.ndarray
    best_iteration: int
    final_labels: np.ndarray
    final_params: GmmParams
    final_loglik: float
    coefficients: np.ndarray
    loglik_trace: np.ndarray
    d_samples: List[np.ndarray] = field(repr=False, default_factory=list)
    references: List[Optional[BetaMixture]] = field(repr=False, default_factory=list)
    kl_masks: List[np.ndarray] = field(repr=False, default_factory=list)
    fallbacks: List[tuple] = field(repr=False, default_factory=list)

    @property
    def outliers(self) -> np.ndarray:
        return self.removal_sequence[: self.best_iteration]

    @property
    def n_outliers(self) -> int:
        return int(self.best_iteration)

    @property
    def cluster_sizes(self) -> np.ndarray:
        G = self.final_params.n_components
        return np.bincount(self.final_labels, minlength=G + 1)[1:]


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def subset_logliks(coefs, G: int, warm: GmmParams, seed: int = 0,
                   tol: float = EM_TOL, max_iter: int = EM_MAX_ITER,
                   chunk: int = SUBSET_CHUNK) -> SubsetLogliks:
    """Log-likelihood of the mixture refitted without each row in turn.

    Every leave-one-out fit starts from ``warm`` (the converged fit on all
    rows) and runs EM to convergence. Fits that degenerate are redone with
    a fresh multi-start fit; their indices are reported in ``fallbacks``.
    A subset on which no valid fit exists gets a log-likelihood of ``-inf``.
    """
    X = np.asarray(coefs, dtype=float)
    n = X.shape[0]
    if warm.n_components != G or warm.dim != X.shape[1]:
        raise ValueError("warm-start parameters do not match the data")
    values = np.empty(n)
    fallbacks = []
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        W = np.ones((idx.size, n))
        W[np.arange(idx.size), idx] = 0.0
        reps = (idx.size, 1)
        out = em_batch(
            X, W,
            np.tile(warm.weights, reps),
            np.tile(warm.means[None], (idx.size, 1, 1)),
            np.tile(warm.covariances[None], (idx.size, 1, 1, 1)),
            tol=tol, max_iter=max_iter,
        )
        values[idx] = out["loglik"]
        for k in np.flatnonzero(out["failed"]):
            j = int(idx[k])
            keep = np.delete(np.arange(n), j)
            fallbacks.append(j)
            try:
                refit = fit_gmm(X[keep], G, seed=derive_seed(seed, j), tol=tol,
                                max_iter=max_iter)
            except DegenerateFitError:
                values[j] = -np.inf
                continue
            values[j] = refit.loglik
    if fallbacks:
        logger.info("%d subset fits fell back to multi-start EM", len(fallbacks))
    return SubsetLogliks(values, fallbacks)


def candidate_outlier(logliks) -> int:
    """Index of the largest subset log-likelihood (lowest index on ties)."""
    v = np.asarray(logliks, dtype=float)
    if v.size == 0:
        raise ValueError("empty log-likelihood vector")
    return int(np.argmax(v))


def d_values(logliks, full_loglik: float) -> np.ndarray:
    return np.asarray(logliks, dtype=float) - full_loglik


def _compact_labels(labels, G):
    # drop components that received no hard assignments
    present = np.flatnonzero(np.bincount(labels, minlength=G))
    remap = np.full(G, -1)
    remap[present] = np.arange(present.size)
    return remap[labels], present.size


def run_oclust(coefs, G: int, F: int, seed: int = 0, bins: int = DEFAULT_BINS,
               n_interior: Optional[int] = None, n_starts: int = N_STARTS,
               tol: float = EM_TOL) -> OclustResult:
    """Trim up to ``F`` outlying rows from ``coefs`` while clustering them.

    ``n_interior`` sets the dimension used by the reference law
    (``p = n_interior + 4``) and defaults to ``coefs.shape[1] - 4``.
    """
    X_all = np.asarray(coefs, dtype=float)
    n, p = X_all.shape
    K = p - 4 if n_interior is None else n_interior
    if K + 4 != p:
        raise ValueError(f"coefficient dimension {p} does not match K={K}")
    if G < 1:
        raise ValueError("G must be at least 1")
    if F < 0 or F >= n - G * (K + 6):
        raise ValueError(
            f"F={F} leaves too few points; need F < n - G(K+6) = {n - G * (K + 6)}"
        )

    retained = np.arange(n)
    removed: List[int] = []
    kl_trace, ll_trace, d_samples, fallbacks = [], [], [], []
    references, kl_masks = [], []
    prev: Optional[GmmParams] = None

    for it in range(F + 1):
        X = X_all[retained]
        fit = fit_gmm(X, G, seed=derive_seed(seed, it), n_starts=n_starts,
                      init=prev, tol=tol)
        prev = fit.params
        labels, n_present = _compact_labels(fit.labels, G)
        stats = cluster_stats(X, labels, n_present, n_interior=K)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mix, usable = mixture_from_stats(stats, K)
        if not usable.all():
            logger.warning("iteration %d: %d cluster(s) too small for the "
                           "reference law", it, int((~usable).sum()))
        sub = subset_logliks(X, G, fit.params, seed=derive_seed(seed, it, 1),
                             tol=tol)
        fallbacks.extend((it, int(retained[j])) for j in sub.fallbacks)
        d = d_values(sub.values, fit.loglik)
        d_samples.append(d)
        ll_trace.append(fit.loglik)
        use = usable[labels] & np.isfinite(d)
        references.append(mix)
        kl_masks.append(use)
        kl = np.inf if mix is None else kl_divergence(d[use], mix, bins)
        kl_trace.append(kl)
        logger.debug("iteration %d: n=%d loglik=%.4f KL=%.5f", it, retained.size,
                     fit.loglik, kl)
        if it == F:
            break
        o = candidate_outlier(sub.values)
        removed.append(int(retained[o]))
        retained = np.delete(retained, o)

    kl_trace = np.asarray(kl_trace)
    removal = np.asarray(removed, dtype=int)
    best = int(np.argmin(kl_trace))
    keep = np.setdiff1d(np.arange(n), removal[:best])
    final = fit_gmm(X_all[keep], G, seed=derive_seed(seed, F + 1), n_starts=n_starts,
                    tol=tol)
    labels = np.full(n, OUTLIER)
    labels[keep] = final.labels + 1
    return OclustResult(
        kl_trace=kl_trace,
        removal_sequence=removal,
        best_iteration=best,
        final_labels=labels,
        final_params=final.params,
        final_loglik=final.loglik,
        coefficients=X_all,
        loglik_trace=np.asarray(ll_trace),
        d_samples=d_samples,
        references=references,
        kl_masks=kl_masks,
        fallbacks=fallbacks,
    )


def run_funoclust(curves: CurveSet, G: int, F: int, knots: Optional[KnotVector] = None,
                  n_interior: int = 8, seed: int = 0, bins: int = DEFAULT_BINS,
                  n_starts: int = N_STARTS) -> OclustResult:
    """Filter curves onto a cubic B-spline basis, then trim and cluster.

    ``knots`` defaults to ``n_interior`` equally spaced knots over the span
    of the time grid.
    """
    if knots is None:
        knots = make_knots(curves.grid[0], curves.grid[-1], n_interior)
    basis = eval_basis(knots, curves.grid)
    coefs = fit_coefficients(basis, curves)
    return run_oclust(coefs, G, F, seed=seed, bins=bins,
                      n_interior=knots.n_interior, n_starts=n_starts)
