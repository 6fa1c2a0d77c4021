"""Clamped cubic B-spline bases and per-curve least-squares filtering.

Curves observed on a shared time grid are projected onto a cubic B-spline
basis with ``K`` equally spaced interior knots, giving each curve a
``K + 4`` dimensional coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

DEGREE = 3
ORDER = DEGREE + 1
RANK_RTOL = 1e-10


class RankDeficientBasisError(ValueError):
    """Raised when the basis matrix does not have full column rank."""


@dataclass(frozen=True)
class KnotVector:
    """Interior knots plus domain bounds of a clamped cubic basis."""

    interior: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        interior = np.asarray(self.interior, dtype=float).reshape(-1)
        object.__setattr__(self, "interior", interior)
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("knot domain bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"inverted knot domain [{self.lo}, {self.hi}]")
        if interior.size:
            if np.any(np.diff(interior) <= 0):
                raise ValueError("interior knots must be strictly increasing")
            if interior[0] <= self.lo or interior[-1] >= self.hi:
                raise ValueError("interior knots must lie strictly inside the domain")

    @property
    def n_interior(self) -> int:
        return self.interior.size

    @property
    def n_basis(self) -> int:
        return self.interior.size + ORDER

    @property
    def full(self) -> np.ndarray:
        """Full knot sequence with boundary knots repeated four times."""
        return np.concatenate(
            [np.full(ORDER, self.lo), self.interior, np.full(ORDER, self.hi)]
        )


@dataclass(frozen=True)
class CurveSet:
    """``n`` curves sampled on a shared, strictly increasing grid.

    ``missing`` is an optional boolean mask of the same shape as ``values``
    marking cells absent from the source. Those cells must hold imputed
    (finite) values before the set can be fitted.
    """

    grid: np.ndarray
    values: np.ndarray
    missing: Optional[np.ndarray] = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.size < 1 or np.any(np.diff(grid) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if values.shape[0] < 1 or values.shape[1] != grid.size:
            raise ValueError(
                f"curve values have shape {values.shape}, expected (n, {grid.size})"
            )
        if self.missing is not None:
            missing = np.asarray(self.missing, dtype=bool)
            if missing.shape != values.shape:
                raise ValueError("missing mask must match the value matrix")
            object.__setattr__(self, "missing", missing)

    @property
    def n_curves(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n_curves

    def subset(self, idx) -> "CurveSet":
        miss = None if self.missing is None else self.missing[idx]
        return CurveSet(self.grid, self.values[idx], miss)


def make_knots(lo: float, hi: float, n_interior: int) -> KnotVector:
    """Equally spaced interior knots on ``[lo, hi]``.

    >>> make_knots(0.0, 10.0, 4).interior
    array([2., 4., 6., 8.])
    """
    if n_interior < 0:
        raise ValueError("number of interior knots must be non-negative")
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("knot domain bounds must be finite")
    if not lo < hi:
        raise ValueError(f"inverted knot domain [{lo}, {hi}]")
    m = np.arange(1, n_interior + 1)
    return KnotVector(lo + m * (hi - lo) / (n_interior + 1), lo, hi)


def eval_basis(knots: KnotVector, grid) -> np.ndarray:
    """Evaluate every cubic B-spline of ``knots`` at the points of ``grid``.

    Uses the Cox-de Boor recursion on the clamped knot sequence. Returns a
    ``(len(grid), K + 4)`` matrix whose rows sum to one.
    """
    t = np.asarray(grid, dtype=float).reshape(-1)
    if np.any(t < knots.lo) or np.any(t > knots.hi):
        bad = t[(t < knots.lo) | (t > knots.hi)][0]
        raise ValueError(
            f"grid point {bad} outside the knot domain [{knots.lo}, {knots.hi}]"
        )
    u = knots.full
    n_spans = u.size - 1

    # order-1 indicators; the right endpoint belongs to the last nonempty span
    B = np.zeros((t.size, n_spans))
    span = np.searchsorted(u, t, side="right") - 1
    last = u.size - ORDER - 1
    span = np.minimum(span, last)
    B[np.arange(t.size), span] = 1.0

    for k in range(1, ORDER):
        nxt = np.zeros((t.size, n_spans - k))
        for i in range(n_spans - k):
            left_den = u[i + k] - u[i]
            right_den = u[i + k + 1] - u[i + 1]
            if left_den > 0:
                nxt[:, i] += (t - u[i]) / left_den * B[:, i]
            if right_den > 0:
                nxt[:, i] += (u[i + k + 1] - t) / right_den * B[:, i + 1]
        B = nxt
    return B


def _check_rank(basis: np.ndarray) -> None:
    if basis.shape[0] < basis.shape[1]:
        raise RankDeficientBasisError(
            f"{basis.shape[0]} grid points cannot determine "
            f"{basis.shape[1]} coefficients"
        )
    sv = np.linalg.svd(basis, compute_uv=False)
    # singular values of B^T B are squares of those of B
    if sv[-1] ** 2 < RANK_RTOL * sv[0] ** 2:
        raise RankDeficientBasisError(
            "basis matrix is rank deficient; grid does not cover every knot span"
        )


def fit_coefficients(basis: np.ndarray, curves) -> np.ndarray:
    """Least-squares coefficients of each curve, one row per curve.

    ``curves`` may be a :class:`CurveSet` or an ``(n, j)`` array. Solved
    through a QR factorization of the basis matrix.
    """
    basis = np.asarray(basis, dtype=float)
    if isinstance(curves, CurveSet):
        Y = curves.values
    else:
        Y = np.atleast_2d(np.asarray(curves, dtype=float))
    if np.isnan(Y).any():
        raise ValueError("curves contain missing values; impute them first")
    if Y.shape[1] != basis.shape[0]:
        raise ValueError(
            f"curves have {Y.shape[1]} points but basis has {basis.shape[0]} rows"
        )
    if not np.all(np.isfinite(Y)):
        raise ValueError("curves contain non-finite values")
    _check_rank(basis)
    Q, R = np.linalg.qr(basis)
    return np.linalg.solve(R, Q.T @ Y.T).T


def reconstruct(basis: np.ndarray, coefs: np.ndarray) -> np.ndarray:
    """Fitted curve values ``B @ b`` on the grid, one row per coefficient row."""
    basis = np.asarray(basis, dtype=float)
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    if coefs.shape[1] != basis.shape[1]:
        raise ValueError(
            f"coefficients have dimension {coefs.shape[1]}, "
            f"basis has {basis.shape[1]} functions"
        )
    return coefs @ basis.T
