"""Full-covariance Gaussian mixtures fitted by EM.

The EM core runs a *batch* of independent fits that share one data matrix
and differ only in per-row weights and starting values. A multi-start fit
is a batch with unit weights; the leave-one-out refits of the trimming
loop are a batch in which fit ``s`` gives zero weight to row ``s``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)
EM_TOL = 1e-8
EM_MAX_ITER = 500
N_STARTS = 10
KMEANS_ITER = 10
REG_SCALE = 1e-8
# smallest effective component size, in multiples of the dimension
MIN_SIZE_FACTOR = 2


class DegenerateFitError(RuntimeError):
    """EM could not produce a non-degenerate mixture."""


@dataclass(frozen=True)
class GmmParams:
    """Mixing weights ``(G,)``, means ``(G, p)`` and covariances ``(G, p, p)``."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        mu = np.asarray(self.means, dtype=float).reshape(w.size, -1)
        p = mu.shape[1]
        cov = np.asarray(self.covariances, dtype=float).reshape(w.size, p, p)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("mixing weights must be positive and sum to one")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def permute(self, order) -> "GmmParams":
        order = np.asarray(order)
        return GmmParams(
            self.weights[order], self.means[order], self.covariances[order]
        )


@dataclass
class GmmFit:
    params: GmmParams
    responsibilities: np.ndarray
    labels: np.ndarray
    loglik: float
    n_iter: int
    converged: bool
    history: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ClusterStats:
    """Hard-assignment summaries of each cluster.

    ``covs`` use the unbiased ``n_h - 1`` divisor.
    """

    sizes: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    pi_hat: np.ndarray
    degenerate: np.ndarray

    @property
    def n_clusters(self) -> int:
        return self.sizes.size


# --------------------------------------------------------------------------
# batched primitives


def _regularize(covs: np.ndarray) -> np.ndarray:
    """Make a batch of covariances factorizable, in place.

    Any matrix whose Cholesky factorization fails gets ``1e-8 * trace / p``
    added to its diagonal, growing tenfold on repeated failure. Returns a
    boolean mask of matrices that could not be repaired.
    """
    p = covs.shape[-1]
    flat = covs.reshape(-1, p, p)
    assert np.shares_memory(flat, covs)
    bad = np.zeros(flat.shape[0], dtype=bool)
    try:
        np.linalg.cholesky(flat)
        return bad.reshape(covs.shape[:-2])
    except np.linalg.LinAlgError:
        pass
    for k, A in enumerate(flat):
        scale = REG_SCALE
        base = np.trace(A) / p
        while True:
            try:
                np.linalg.cholesky(A)
                break
            except np.linalg.LinAlgError:
                if not (np.isfinite(base) and base > 0) or scale > 1e-2:
                    bad[k] = True
                    break
                A[np.diag_indices(p)] += scale * base
                scale *= 10.0
    return bad.reshape(covs.shape[:-2])


def _component_logpdf(X, means, covs):
    """``log N(x_i | mu_g, Sigma_g)`` for a batch, shape ``(S, G, n)``."""
    p = X.shape[1]
    L = np.linalg.cholesky(covs)
    Linv = np.linalg.inv(L)
    diff = X[None, None, :, :] - means[:, :, None, :]
    z = diff @ np.swapaxes(Linv, -1, -2)
    maha = np.einsum("sgnp,sgnp->sgn", z, z)
    logdet = 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(-1)
    return -0.5 * (p * LOG_2PI + logdet[..., None] + maha)


def _e_step(X, W, weights, means, covs):
    """Returns (per-fit loglik ``(S,)``, responsibilities ``(S, n, G)``)."""
    logp = _component_logpdf(X, means, covs) + np.log(weights)[..., None]
    lse = logsumexp(logp, axis=1)
    resp = np.exp(logp - lse[:, None, :])
    return (W * lse).sum(axis=1), np.swapaxes(resp, 1, 2)


def _m_step(X, W, resp):
    Rw = resp * W[:, :, None]
    Nk = Rw.sum(axis=1)
    weights = Nk / W.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.einsum("sng,np->sgp", Rw, X) / Nk[..., None]
    diff = X[None, None, :, :] - means[:, :, None, :]
    weighted = diff * np.swapaxes(Rw, 1, 2)[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        covs = np.swapaxes(weighted, -1, -2) @ diff / Nk[..., None, None]
    covs = 0.5 * (covs + np.swapaxes(covs, -1, -2))
    return weights, means, covs, Nk


def em_batch(
    X: np.ndarray,
    W: np.ndarray,
    weights: np.ndarray,
    means: np.ndarray,
    covs: np.ndarray,
    tol: float = EM_TOL,
    max_iter: int = EM_MAX_ITER,
    min_size: Optional[float] = None,
):
    """Run ``S`` weighted EM fits to convergence.

    ``W`` is ``(S, n)``; starting parameters carry a leading ``S`` axis.
    A fit stops once the relative change of its log-likelihood drops below
    ``tol``. A fit is marked failed when a component's effective size falls
    below ``min_size`` (default ``2 p``) or its covariance cannot be
    factorized.

    Returns a dict of arrays: ``weights, means, covs, loglik, resp, n_iter,
    converged, failed`` and ``history`` (list of per-fit loglik traces).
    """
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    S, n = W.shape
    p = X.shape[1]
    if min_size is None:
        min_size = MIN_SIZE_FACTOR * p
    weights = np.array(weights, dtype=float)
    means = np.array(means, dtype=float)
    covs = np.array(covs, dtype=float)
    G = weights.shape[1]

    loglik = np.full(S, -np.inf)
    resp = np.zeros((S, n, G))
    n_iter = np.zeros(S, dtype=int)
    converged = np.zeros(S, dtype=bool)
    failed = np.zeros(S, dtype=bool)
    history = [[] for _ in range(S)]
    failed |= _regularize(covs).any(axis=1)
    active = np.flatnonzero(~failed)

    for it in range(max_iter + 1):
        if active.size == 0:
            break
        ll, r = _e_step(X, W[active], weights[active], means[active], covs[active])
        bad = ~np.isfinite(ll)
        prev = loglik[active]
        loglik[active] = ll
        resp[active] = r
        n_iter[active] = it
        for k, s in enumerate(active):
            history[s].append(ll[k])
        done = np.isfinite(prev) & (np.abs(ll - prev) <= tol * np.abs(prev))
        converged[active[done]] = True
        failed[active[bad]] = True
        keep = ~(done | bad)
        if it == max_iter:
            break
        active = active[keep]
        if active.size == 0:
            break
        w_new, mu_new, cov_new, Nk = _m_step(X, W[active], resp[active])
        small = (Nk < min_size).any(axis=1) | ~np.isfinite(cov_new).all(axis=(1, 2, 3))
        cov_new[small] = np.eye(p)  # placeholder; these fits are dropped
        small |= _regularize(cov_new).any(axis=1)
        failed[active[small]] = True
        active = active[~small]
        weights[active] = w_new[~small]
        means[active] = mu_new[~small]
        covs[active] = cov_new[~small]

    return dict(
        weights=weights, means=means, covs=covs, loglik=loglik, resp=resp,
        n_iter=n_iter, converged=converged, failed=failed,
        history=[np.asarray(h) for h in history],
    )


# --------------------------------------------------------------------------
# public API


def _params_from_labels(X, labels, G):
    n, p = X.shape
    glob_cov = np.cov(X, rowvar=False, bias=True).reshape(p, p)
    glob_cov = glob_cov + np.eye(p) * REG_SCALE * max(np.trace(glob_cov) / p, 1e-300)
    weights = np.empty(G)
    means = np.empty((G, p))
    covs = np.empty((G, p, p))
    for g in range(G):
        members = X[labels == g]
        weights[g] = max(members.shape[0], 1)
        if members.shape[0] > p:
            means[g] = members.mean(axis=0)
            covs[g] = np.cov(members, rowvar=False, bias=True)
        elif members.shape[0] > 0:
            means[g] = members.mean(axis=0)
            covs[g] = glob_cov
        else:
            means[g] = X.mean(axis=0)
            covs[g] = glob_cov
    return weights / weights.sum(), means, covs


def _kmeans_start(X, G, rng, n_iter=KMEANS_ITER):
    n = X.shape[0]
    centers = X[rng.choice(n, size=G, replace=False)]
    labels = np.zeros(n, dtype=int)
    for _ in range(n_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        new = d2.argmin(axis=1)
        if _ > 0 and np.array_equal(new, labels):
            break
        labels = new
        for g in range(G):
            if np.any(labels == g):
                centers[g] = X[labels == g].mean(axis=0)
    return _params_from_labels(X, labels, G)


def fit_gmm(
    coefs,
    G: int,
    seed: int = 0,
    n_starts: int = N_STARTS,
    init: Optional[GmmParams | Sequence[GmmParams]] = None,
    tol: float = EM_TOL,
    max_iter: int = EM_MAX_ITER,
    max_restarts: int = 3,
) -> GmmFit:
    """Fit a ``G``-component full-covariance Gaussian mixture by EM.

    Parameters
    ----------
    coefs : (n, p) array
    G : int
        Number of components.
    seed : int
        Seeds the random k-means style initializations.
    n_starts : int
        Number of random starts; the fit with the largest final
        log-likelihood is returned.
    init : GmmParams or list of GmmParams, optional
        Extra starting values run alongside the random starts. With
        ``n_starts=0`` only these are used.

    Raises
    ------
    DegenerateFitError
        If every start (after ``max_restarts`` rounds of fresh seeds)
        collapses a component.
    """
    X = np.asarray(coefs, dtype=float)
    if X.ndim != 2:
        raise ValueError("coefficients must be a 2-D array")
    if G < 1:
        raise ValueError("G must be at least 1")
    n, p = X.shape
    if n < G:
        raise ValueError(f"cannot fit {G} components to {n} points")
    if isinstance(init, GmmParams):
        init = [init]
    init = list(init or [])
    for par in init:
        if par.n_components != G or par.dim != p:
            raise ValueError("initial parameters do not match (G, p)")

    if n_starts <= 0 and not init:
        raise ValueError("no starting values: n_starts=0 and no init")
    rng = np.random.default_rng(seed)
    for attempt in range(max_restarts + 1):
        if attempt == 0:
            starts = [(par.weights, par.means, par.covariances) for par in init]
            starts += [_kmeans_start(X, G, rng) for _ in range(n_starts)]
        else:
            starts = [_kmeans_start(X, G, rng) for _ in range(max(n_starts, N_STARTS))]
        w0 = np.stack([s[0] for s in starts])
        mu0 = np.stack([s[1] for s in starts])
        cov0 = np.stack([s[2] for s in starts])
        W = np.ones((len(starts), n))
        out = em_batch(X, W, w0, mu0, cov0, tol=tol, max_iter=max_iter)
        ok = ~out["failed"]
        if ok.any():
            ll = np.where(ok, out["loglik"], -np.inf)
            best = int(np.argmax(ll))
            params = GmmParams(out["weights"][best], out["means"][best],
                               out["covs"][best])
            resp = out["resp"][best]
            return GmmFit(
                params=params,
                responsibilities=resp,
                labels=resp.argmax(axis=1),
                loglik=float(out["loglik"][best]),
                n_iter=int(out["n_iter"][best]),
                converged=bool(out["converged"][best]),
                history=out["history"][best],
            )
        logger.warning("all %d EM starts degenerate; restarting", len(starts))
    raise DegenerateFitError(
        f"EM failed to find a non-degenerate {G}-component fit after "
        f"{max_restarts + 1} rounds"
    )


def responsibilities(params: GmmParams, coefs) -> np.ndarray:
    X = np.asarray(coefs, dtype=float)
    _, r = _e_step(X, np.ones((1, X.shape[0])), params.weights[None],
                   params.means[None], params.covariances[None])
    return r[0]


def log_likelihood(params: GmmParams, coefs) -> float:
    """Mixture log-likelihood ``sum_i log sum_g pi_g N(b_i | mu_g, Sigma_g)``."""
    X = np.atleast_2d(np.asarray(coefs, dtype=float))
    if X.shape[1] != params.dim:
        raise ValueError("dimension mismatch between data and parameters")
    logp = _component_logpdf(X, params.means[None], params.covariances[None])[0]
    logp += np.log(params.weights)[:, None]
    return float(logsumexp(logp, axis=0).sum())


def complete_data_log_likelihood(params: GmmParams, coefs, labels) -> float:
    """Log-likelihood with hard memberships, labels in ``0..G-1``."""
    X = np.atleast_2d(np.asarray(coefs, dtype=float))
    labels = np.asarray(labels)
    if labels.shape != (X.shape[0],):
        raise ValueError("one label per row required")
    if labels.size and (labels.min() < 0 or labels.max() >= params.n_components):
        raise ValueError("label out of range")
    logp = _component_logpdf(X, params.means[None], params.covariances[None])[0]
    logp += np.log(params.weights)[:, None]
    return float(logp[labels, np.arange(X.shape[0])].sum())


def cluster_stats(coefs, labels, G: Optional[int] = None,
                  n_interior: Optional[int] = None) -> ClusterStats:
    """Size, mean, unbiased covariance and proportion of each hard cluster.

    ``degenerate`` flags clusters with a singular covariance and, when
    ``n_interior`` is given, clusters with ``n_h <= n_interior + 5``.
    """
    X = np.atleast_2d(np.asarray(coefs, dtype=float))
    labels = np.asarray(labels, dtype=int)
    G = int(labels.max()) + 1 if G is None else G
    n, p = X.shape
    sizes = np.bincount(labels, minlength=G)[:G]
    if np.any(sizes == 0):
        raise ValueError(f"empty cluster(s): {np.flatnonzero(sizes == 0).tolist()}")
    means = np.empty((G, p))
    covs = np.zeros((G, p, p))
    degenerate = np.zeros(G, dtype=bool)
    for g in range(G):
        members = X[labels == g]
        means[g] = members.mean(axis=0)
        if sizes[g] > 1:
            c = members - means[g]
            covs[g] = c.T @ c / (sizes[g] - 1)
        sign, _ = np.linalg.slogdet(covs[g])
        degenerate[g] = sign <= 0
        if n_interior is not None and sizes[g] <= n_interior + 5:
            degenerate[g] = True
    return ClusterStats(sizes, means, covs, sizes / n, degenerate)
