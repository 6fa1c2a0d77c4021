"""Shifted and scaled beta law of subset log-likelihood differences.

For a point in cluster ``h`` of size ``n_h`` with ``p = K + 4`` fitted
coefficients, ``scale * (d - c)`` follows ``Beta(p / 2, (n_h - p - 1) / 2)``
on the support ``c < d < c + 1 / scale``, where ``scale = 2 n_h / (n_h - 1)^2``
and ``c = -log(pi_h) + p/2 log(2 pi) + 1/2 log|S_h|``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import betainc, betaincinv, betaln, xlogy

from .mixture import ClusterStats

LOG_2PI = np.log(2.0 * np.pi)
DEFAULT_BINS = 10
MASS_FLOOR = 1e-12


class UnusableComponentError(ValueError):
    """Cluster too small (``n_h <= K + 5``) or singular for the beta law."""


@dataclass(frozen=True)
class BetaComponent:
    n_h: int
    n_interior: int
    pi_hat: float
    c: float

    @property
    def dim(self) -> int:
        return self.n_interior + 4

    @property
    def scale(self) -> float:
        return 2.0 * self.n_h / (self.n_h - 1) ** 2

    @property
    def shape1(self) -> float:
        return self.dim / 2.0

    @property
    def shape2(self) -> float:
        return (self.n_h - self.dim - 1) / 2.0

    @property
    def lower(self) -> float:
        return self.c

    @property
    def upper(self) -> float:
        return self.c + (self.n_h - 1) ** 2 / (2.0 * self.n_h)

    def mean(self) -> float:
        return self.c + self.shape1 / (self.shape1 + self.shape2) / self.scale

    def pdf(self, d) -> np.ndarray:
        x = self.scale * (np.asarray(d, dtype=float) - self.c)
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        a, b = self.shape1, self.shape2
        logpdf = xlogy(a - 1, xs) + xlogy(b - 1, 1 - xs) - betaln(a, b)
        return np.where(inside, self.scale * np.exp(logpdf), 0.0)

    def cdf(self, d) -> np.ndarray:
        x = np.clip(self.scale * (np.asarray(d, dtype=float) - self.c), 0.0, 1.0)
        return betainc(self.shape1, self.shape2, x)

    def ppf(self, q) -> np.ndarray:
        return self.c + betaincinv(self.shape1, self.shape2, q) / self.scale


def beta_component(n_h: int, pi_hat: float, logdet: float,
                   n_interior: int) -> BetaComponent:
    """Component for a cluster of ``n_h`` points with ``log|S_h| = logdet``."""
    p = n_interior + 4
    if n_h <= n_interior + 5:
        raise UnusableComponentError(
            f"cluster of size {n_h} needs more than {n_interior + 5} points"
        )
    if not np.isfinite(logdet):
        raise UnusableComponentError("cluster covariance is singular")
    if not 0 < pi_hat <= 1:
        raise ValueError("pi_hat must lie in (0, 1]")
    c = -np.log(pi_hat) + 0.5 * p * LOG_2PI + 0.5 * logdet
    return BetaComponent(int(n_h), int(n_interior), float(pi_hat), float(c))


@dataclass(frozen=True)
class BetaMixture:
    components: Tuple[BetaComponent, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.components) == 0 or w.size != len(self.components):
            raise ValueError("need one weight per component")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-10:
            raise ValueError("mixture weights must be positive and sum to one")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", w)

    @property
    def lower(self) -> float:
        return min(comp.lower for comp in self.components)

    @property
    def upper(self) -> float:
        return max(comp.upper for comp in self.components)

    def pdf(self, d) -> np.ndarray:
        return sum(w * comp.pdf(d) for w, comp in zip(self.weights, self.components))

    def cdf(self, d) -> np.ndarray:
        return sum(w * comp.cdf(d) for w, comp in zip(self.weights, self.components))


def component_params(stats: ClusterStats, n_interior: int) -> List[BetaComponent]:
    """One beta component per cluster; raises if any cluster is unusable."""
    comps = []
    for g in range(stats.n_clusters):
        sign, logdet = np.linalg.slogdet(stats.covs[g])
        if sign <= 0:
            raise UnusableComponentError(f"cluster {g} covariance is singular")
        comps.append(beta_component(stats.sizes[g], stats.pi_hat[g], logdet, n_interior))
    return comps


def mixture_from_stats(stats: ClusterStats, n_interior: int):
    """Beta mixture over the usable clusters.

    Returns ``(mixture, usable)`` where ``usable`` is a boolean mask over
    clusters. Unusable clusters are dropped with a warning and the remaining
    weights renormalized; ``mixture`` is ``None`` when nothing is usable.
    """
    comps, usable = [], np.zeros(stats.n_clusters, dtype=bool)
    for g in range(stats.n_clusters):
        sign, logdet = np.linalg.slogdet(stats.covs[g])
        try:
            comps.append(beta_component(
                stats.sizes[g], stats.pi_hat[g], logdet if sign > 0 else -np.inf,
                n_interior))
            usable[g] = True
        except UnusableComponentError as exc:
            warnings.warn(f"cluster {g} excluded from the beta mixture: {exc}",
                          RuntimeWarning, stacklevel=2)
    if not comps:
        return None, usable
    w = stats.pi_hat[usable]
    return BetaMixture(tuple(comps), w / w.sum()), usable


def density_d(d, mix: BetaMixture) -> np.ndarray:
    """Mixture density of the subset log-likelihood difference at ``d``."""
    return mix.pdf(d)


def bin_edges(mix: BetaMixture, bins: int = DEFAULT_BINS) -> np.ndarray:
    return np.linspace(mix.lower, mix.upper, bins + 1)


def kl_divergence(sample: Sequence[float], mix: BetaMixture,
                  bins: int = DEFAULT_BINS) -> float:
    """Binned KL divergence of the observed differences from ``mix``.

    The union of component supports is cut into ``bins`` equal-width bins.
    Sample values outside it are clamped into the nearest edge bin.
    Theoretical bin masses come from the exact beta CDFs and are floored at
    ``1e-12``.
    """
    d = np.asarray(sample, dtype=float).reshape(-1)
    if bins < 2:
        raise ValueError("need at least two bins")
    if d.size < bins:
        raise ValueError(f"sample of size {d.size} is smaller than bins={bins}")
    if not np.all(np.isfinite(d)):
        raise ValueError("sample contains non-finite values")
    edges = bin_edges(mix, bins)
    idx = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, bins - 1)
    p_emp = np.bincount(idx, minlength=bins) / d.size
    mass = np.diff(mix.cdf(edges))
    if mass.sum() <= 0:
        raise ValueError("theoretical distribution has no mass on the bins")
    p_theo = np.maximum(mass, MASS_FLOOR)
    pos = p_emp > 0
    return float(np.sum(p_emp[pos] * np.log(p_emp[pos] / p_theo[pos])))
