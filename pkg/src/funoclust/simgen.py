"""Simulated curve families with uniformly scattered outlier curves.

Class 1 curves are ``a sin(t - b) + g + noise`` and class 2 curves are
``a log(t + b) + g + noise``, with per-curve random scale and shifts. Outlier
curves draw every entry uniformly between the smallest and largest value
observed over all class curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import CurveSet
from .oclust import OUTLIER


@dataclass(frozen=True)
class SimConfig:
    n_per_class: int = 250
    n_outliers: int = 15
    n_points: int = 100
    t_max: float = 2.0 * np.pi
    noise_sd: float = 0.4
    scale_mean: float = 1.0
    scale_sd: float = 0.4
    # (mean, sd) of the horizontal and vertical shifts of each class
    shift1: tuple = (0.0, 0.4)
    level1: tuple = (0.0, 0.4)
    shift2: tuple = (2.0, 0.4)
    level2: tuple = (-1.0, 0.4)
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1 or self.n_outliers < 0 or self.n_points < 2:
            raise ValueError("counts must be positive")
        sds = (self.noise_sd, self.scale_sd, self.shift1[1], self.level1[1],
               self.shift2[1], self.level2[1])
        if min(sds) < 0:
            raise ValueError("standard deviations must be non-negative")


@dataclass(frozen=True)
class LabeledCurveSet:
    curves: CurveSet
    labels: np.ndarray

    def __post_init__(self):
        if len(self.labels) != self.curves.n_curves:
            raise ValueError("one label per curve required")


def _log_shifts(rng, n, mean, sd):
    # the class-2 curve is undefined at t=0 unless the shift is positive
    b = rng.normal(mean, sd, n)
    while np.any(b <= 0):
        bad = b <= 0
        b[bad] = rng.normal(mean, sd, bad.sum())
    return b


def generate(config: SimConfig = SimConfig()) -> LabeledCurveSet:
    """Draw one simulated data set; labels are 1, 2, or 0 for outliers."""
    rng = np.random.default_rng(config.seed)
    t = np.linspace(0.0, config.t_max, config.n_points)
    m = config.n_per_class

    a1 = rng.normal(config.scale_mean, config.scale_sd, m)
    b1 = rng.normal(*config.shift1, m)
    g1 = rng.normal(*config.level1, m)
    y1 = a1[:, None] * np.sin(t[None, :] - b1[:, None]) + g1[:, None]
    y1 += rng.normal(0.0, config.noise_sd, y1.shape)

    a2 = rng.normal(config.scale_mean, config.scale_sd, m)
    b2 = _log_shifts(rng, m, *config.shift2)
    g2 = rng.normal(*config.level2, m)
    y2 = a2[:, None] * np.log(t[None, :] + b2[:, None]) + g2[:, None]
    y2 += rng.normal(0.0, config.noise_sd, y2.shape)

    good = np.vstack([y1, y2])
    lo, hi = good.min(), good.max()
    out = rng.uniform(lo, hi, (config.n_outliers, t.size))
    values = np.vstack([good, out])
    labels = np.concatenate([
        np.full(m, 1), np.full(m, 2), np.full(config.n_outliers, OUTLIER)
    ])
    return LabeledCurveSet(CurveSet(t, values), labels)
