"""Vectorised PCA baseline that ignores the matrix structure.

Each ``X_t`` is flattened column-wise to a ``p1 p2`` vector, so the loading
matrix estimates a basis of ``span(C (x) R)`` directly.  The eigenproblem is
``(p1 p2) x (p1 p2)``, hence the dimension guard.  Above
``JACOBI_MAX_DIM`` the LAPACK solver is used (same ordering and sign
convention), since Jacobi sweeps get slow at that size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionGuard, ShapeMismatch, TooShort
from .linalg import as_series, sym_eig, symmetrize
from .mpca import RatioSelection, default_k, ratio_criterion

MAX_VECTOR_DIM = 2000
JACOBI_MAX_DIM = 200


@dataclass(frozen=True)
class VectorizedFit:
    loadings: np.ndarray
    factors: np.ndarray
    eigvals: np.ndarray
    r: int
    r_hat: Optional[int]
    selection: Optional[RatioSelection] = None


def vectorize(X) -> np.ndarray:
    """``(T, p1 p2)`` matrix whose row ``t`` is ``vec(X_t)`` (columns stacked)."""
    X = as_series(X)
    return np.swapaxes(X, 1, 2).reshape(X.shape[0], -1)


def vectorized_covariance(X) -> np.ndarray:
    Y = vectorize(X)
    return symmetrize(Y.T @ Y / Y.shape[0])


def fit_vectorized(X, r: int | None = None, K: int | None = None, backend: str | None = None) -> VectorizedFit:
    """One-sided PCA on the flattened series.

    ``r`` defaults to the ratio-criterion choice; the criterion is reported
    whenever the dimension allows it.
    """
    X = as_series(X)
    T, p1, p2 = X.shape
    d = p1 * p2
    if d > MAX_VECTOR_DIM:
        raise DimensionGuard(f"p1 * p2 = {d} exceeds the dense-eigensolve guard {MAX_VECTOR_DIM}")
    if T < 2:
        raise TooShort(f"need T >= 2, got T = {T}")
    if backend is None and d > JACOBI_MAX_DIM:
        backend = "lapack"
    eig = sym_eig(vectorized_covariance(X), backend=backend)
    values = np.maximum(eig.values, 0.0)
    selection = None
    if d > 1:
        selection = ratio_criterion(values, default_k(d) if K is None else K)
    r_hat = selection.r_hat if selection is not None else None
    if r is None:
        r = r_hat if r_hat is not None else 1
    if not 1 <= r <= d:
        raise ShapeMismatch(f"r must satisfy 1 <= r <= {d}, got {r}")
    L = eig.vectors[:, :r]
    return VectorizedFit(
        loadings=L,
        factors=vectorize(X) @ L,
        eigvals=values,
        r=r,
        r_hat=r_hat,
        selection=selection,
    )
