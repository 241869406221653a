"""Long-format panel files: one ``t,row,col,value`` record per matrix entry."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import DuplicateCell, MissingCell, NonPositiveForLog, ParseError

HEADER = ("t", "row", "col", "value")
TRANSFORMS = ("none", "log", "logdiff")


@dataclass(frozen=True)
class PanelSchema:
    """Axis labels of a loaded panel.

    ``times`` are sorted; ``rows`` and ``cols`` keep their order of first
    appearance in the file.  After ``logdiff`` the first time label is gone.
    """

    times: tuple
    rows: tuple
    cols: tuple
    transform: str = "none"


def _time_key(labels):
    try:
        return [int(s) for s in labels]
    except ValueError:
        pass
    keys = []
    for s in labels:
        try:
            keys.append(date.fromisoformat(s if len(s) != 7 else s + "-01"))
        except ValueError:
            raise ParseError(f"time label {s!r} is neither an integer nor an ISO date") from None
    return keys


def load_panel(path, transform: str = "none") -> tuple[np.ndarray, PanelSchema]:
    """Read a long-format CSV into a ``(T, p1, p2)`` array.

    The header must be ``t,row,col,value``.  Every (time, row, col) triple
    must occur exactly once.  ``transform`` is ``none``, ``log`` or
    ``logdiff`` (log levels, then first differences).
    """
    if transform not in TRANSFORMS:
        raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}")
    times, rows, cols = {}, {}, {}
    cells = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"header must be {','.join(HEADER)}, got {','.join(header)}", line=1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 4:
                raise ParseError(f"expected 4 fields, got {len(rec)}", line=lineno)
            t, r, c, v = (x.strip() for x in rec)
            try:
                value = float(v)
            except ValueError:
                raise ParseError(f"value {v!r} is not a number", line=lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"value {v!r} is not finite", line=lineno)
            key = (t, r, c)
            if key in cells:
                raise DuplicateCell(f"duplicate entry for t={t}, row={r}, col={c} (line {lineno})")
            cells[key] = value
            times.setdefault(t, None)
            rows.setdefault(r, None)
            cols.setdefault(c, None)
    if not cells:
        raise ParseError("no data rows", line=2)
    time_labels = list(times)
    order = sorted(range(len(time_labels)), key=_time_key(time_labels).__getitem__)
    time_labels = [time_labels[i] for i in order]
    row_labels, col_labels = list(rows), list(cols)
    X = np.empty((len(time_labels), len(row_labels), len(col_labels)))
    for ti, t in enumerate(time_labels):
        for ri, r in enumerate(row_labels):
            for ci, c in enumerate(col_labels):
                try:
                    X[ti, ri, ci] = cells[(t, r, c)]
                except KeyError:
                    raise MissingCell(f"missing entry for t={t}, row={r}, col={c}") from None
    if transform in ("log", "logdiff"):
        if np.any(X <= 0):
            ti, ri, ci = np.argwhere(X <= 0)[0]
            raise NonPositiveForLog(
                f"log transform needs positive values; t={time_labels[ti]}, "
                f"row={row_labels[ri]}, col={col_labels[ci]} is {X[ti, ri, ci]}"
            )
        X = np.log(X)
    if transform == "logdiff":
        if X.shape[0] < 2:
            raise ParseError("logdiff needs at least two time points")
        X = np.diff(X, axis=0)
        time_labels = time_labels[1:]
    return X, PanelSchema(tuple(time_labels), tuple(row_labels), tuple(col_labels), transform)


def default_labels(X: np.ndarray):
    T, p1, p2 = X.shape
    return (
        [str(t + 1) for t in range(T)],
        [f"r{i + 1}" for i in range(p1)],
        [f"c{j + 1}" for j in range(p2)],
    )


def write_panel(path, X, times=None, rows=None, cols=None) -> None:
    """Write ``X`` in long format with 17 significant digits.

    Records run over time, then row, then column, so each ``X_t`` appears in
    row-major order.
    """
    X = np.asarray(X, dtype=float)
    dt, dr, dc = default_labels(X)
    times = dt if times is None else list(times)
    rows = dr if rows is None else list(rows)
    cols = dc if cols is None else list(cols)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for ti, t in enumerate(times):
            for ri, r in enumerate(rows):
                for ci, c in enumerate(cols):
                    w.writerow((t, r, c, format(X[ti, ri, ci], ".17g")))


def write_matrix(path, M, row_labels=None, col_labels=None, corner: str = "row") -> None:
    """Write a labelled 2-D matrix as CSV."""
    M = np.asarray(M, dtype=float)
    row_labels = [str(i + 1) for i in range(M.shape[0])] if row_labels is None else list(row_labels)
    col_labels = [str(j + 1) for j in range(M.shape[1])] if col_labels is None else list(col_labels)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner, *col_labels])
        for label, row in zip(row_labels, M):
            w.writerow([label, *(format(v, ".17g") for v in row)])


def read_matrix(path) -> tuple[np.ndarray, list, list]:
    """Inverse of :func:`write_matrix`: ``(matrix, row_labels, col_labels)``."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty matrix file", line=1)
    col_labels = rows[0][1:]
    labels, data = [], []
    for lineno, rec in enumerate(rows[1:], start=2):
        labels.append(rec[0])
        try:
            data.append([float(v) for v in rec[1:]])
        except ValueError:
            raise ParseError("non-numeric matrix entry", line=lineno) from None
    return np.array(data, dtype=float).reshape(len(labels), len(col_labels)), labels, col_labels
