"""CSV interchange: the first row is the time grid, each later row one curve."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np

from .basis import CurveSet

FLOAT_FMT = "{:.12g}"


class CurveFileError(ValueError):
    """Malformed curve file."""


def fmt(x) -> str:
    return FLOAT_FMT.format(float(x))


def _parse_cell(cell: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise CurveFileError(f"row {row}, column {col}: non-numeric cell {cell!r}") from None


def ingest(path, impute_missing: bool = False) -> Tuple[CurveSet, int]:
    """Read a curve file; returns the curves and the number of imputed cells.

    Empty cells are missing. With ``impute_missing`` each one is replaced by
    the mean of its column over the observed values; otherwise any missing
    cell is an error.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise CurveFileError(f"{path}: need a time-grid row and at least one curve")
    header = rows[0]
    j = len(header)
    grid = np.array([_parse_cell(c.strip(), 1, k + 1) for k, c in enumerate(header)])
    values = np.full((len(rows) - 1, j), np.nan)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != j:
            raise CurveFileError(f"row {i} has {len(row)} cells, expected {j}")
        for k, cell in enumerate(row):
            cell = cell.strip()
            if cell:
                values[i - 2, k] = _parse_cell(cell, i, k + 1)
    missing = np.isnan(values)
    if missing.all(axis=0).any():
        col = int(np.flatnonzero(missing.all(axis=0))[0]) + 1
        raise CurveFileError(f"column {col} has no observed values")
    n_missing = int(missing.sum())
    if n_missing:
        if not impute_missing:
            r, c = np.argwhere(missing)[0]
            raise CurveFileError(
                f"row {r + 2}, column {c + 1} is missing; rerun with imputation")
        col_means = np.nanmean(values, axis=0)
        values = np.where(missing, col_means[None, :], values)
    try:
        curves = CurveSet(grid, values, missing if n_missing else None)
    except ValueError as exc:
        raise CurveFileError(str(exc)) from None
    return curves, n_missing


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path, header: Sequence, rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    _atomic_write(path, buf.getvalue())


def write_curves(path, grid, values) -> None:
    write_rows(path, [fmt(t) for t in grid], ([fmt(v) for v in row] for row in values))


def write_text(path, text: str) -> None:
    _atomic_write(path, text)


def read_matrix(path, skip_header: bool = True) -> np.ndarray:
    """Read a numeric CSV, dropping its first row when ``skip_header``."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if skip_header:
        rows = rows[1:]
    return np.array([[float(c) for c in r] for r in rows])
