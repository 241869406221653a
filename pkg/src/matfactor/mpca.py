"""mPCA: eigenanalysis of level covariances for integrated matrix factors.

For an observed series ``X`` of shape ``(T, p1, p2)`` the row and column
sample covariances are eigen-decomposed; leading eigenvectors estimate the
loading spans, the eigenvalue ratio picks the factor counts, and the factor
matrices are recovered with the adaptive normalisation that keeps weak
factors on the same scale as strong ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AllZero, DegenerateEigenvalue, KOutOfRange, ShapeMismatch, TooShort
from .linalg import EigenSystem, as_series, demean as _demean, sym_eig, symmetrize

NORMALIZATIONS = ("row", "col", "sum")
RATIO_FLOOR = 1e-12
DEGENERATE_FLOOR = 1e-12
DEFAULT_K = 10


@dataclass(frozen=True)
class RatioSelection:
    K: int
    ratios: np.ndarray
    r_hat: int


@dataclass(frozen=True)
class FactorFit:
    """Result of an mPCA or mPANIC fit.

    ``row_eigvals`` / ``col_eigvals`` hold the full descending spectra of the
    covariance matrices the loadings came from (levels for mPCA, first
    differences for mPANIC).
    """

    method: str
    r1: int
    r2: int
    R_hat: np.ndarray
    C_hat: np.ndarray
    F_hat: np.ndarray
    row_eigvals: np.ndarray
    col_eigvals: np.ndarray
    normalization: str = "row"
    demeaned: bool = False
    row_selection: Optional[RatioSelection] = field(default=None, compare=False)
    col_selection: Optional[RatioSelection] = field(default=None, compare=False)

    def common_components(self, X) -> np.ndarray:
        return common_components(X, self.R_hat, self.C_hat)


def _outer_sums(X: np.ndarray, divisor: int) -> tuple[np.ndarray, np.ndarray]:
    # row: sum_t X_t X_t^T; col: sum_t X_t^T X_t, each as one BLAS product
    T, p1, p2 = X.shape
    wide = np.ascontiguousarray(X.transpose(1, 0, 2)).reshape(p1, T * p2)
    tall = X.reshape(T * p1, p2)
    return symmetrize(wide @ wide.T / divisor), symmetrize(tall.T @ tall / divisor)


def row_covariance(X) -> np.ndarray:
    """``(1/T) sum_t X_t X_t^T``, symmetrised."""
    X = as_series(X)
    return _outer_sums(X, X.shape[0])[0]


def col_covariance(X) -> np.ndarray:
    """``(1/T) sum_t X_t^T X_t``, symmetrised."""
    X = as_series(X)
    return _outer_sums(X, X.shape[0])[1]


def ratio_criterion(eigvals, K: int) -> RatioSelection:
    """Pick the factor count minimising ``|lambda_{k+1} / lambda_k|`` over ``k <= K``.

    Eigenvalues are floored at ``1e-12 * lambda_1`` before dividing, in both
    numerator and denominator, so the numerically-zero tail of a low-rank
    spectrum gives ratios of one rather than ``0/0`` or spurious zeros.  Ties
    go to the smallest ``k``.
    """
    lam = np.asarray(eigvals, dtype=float)
    K = int(K)
    if not 1 <= K < lam.size:
        raise KOutOfRange(f"K must satisfy 1 <= K < {lam.size}, got {K}")
    if not lam[0] > 0:
        raise AllZero("largest eigenvalue is zero; no factor structure to select")
    floor = RATIO_FLOOR * lam[0]
    clipped = np.maximum(lam[: K + 1], floor)
    ratios = clipped[1:] / clipped[:-1]
    return RatioSelection(K=K, ratios=ratios, r_hat=int(np.argmin(ratios)) + 1)


def default_k(p: int) -> int:
    return min(DEFAULT_K, p - 1)


def spectra(X) -> tuple[EigenSystem, EigenSystem]:
    """Eigen-decompositions of the row and column level covariances."""
    row = sym_eig(row_covariance(X))
    col = sym_eig(col_covariance(X))
    return _clip(row), _clip(col)


def _clip(eig: EigenSystem) -> EigenSystem:
    # covariances are PSD; negative values are rounding noise
    return EigenSystem(np.maximum(eig.values, 0.0), eig.vectors)


def estimate_loadings(X, r1: int, r2: int):
    """Top-``r1`` row and top-``r2`` column eigenvectors of the level covariances.

    Returns ``(R_hat, C_hat, row_eigvals, col_eigvals)`` with the full spectra.
    """
    X = as_series(X)
    _check_rank(r1, X.shape[1], "r1")
    _check_rank(r2, X.shape[2], "r2")
    row, col = spectra(X)
    return row.vectors[:, :r1], col.vectors[:, :r2], row.values, col.values


def _check_rank(r, p, name):
    if not 1 <= r <= p:
        raise ShapeMismatch(f"{name} must satisfy 1 <= {name} <= {p}, got {r}")


def scaled_factors(X, R_hat, C_hat, row_vals, col_vals, normalization: str = "row") -> np.ndarray:
    """``lam^{1/2} V_R^{-1/2} R^T X_t C V_C^{-1/2}`` for already-scaled spectra.

    ``row_vals`` and ``col_vals`` are the (scaled) spectra whose leading
    entries form ``V_R``, ``V_C`` and the normaliser ``lam``.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    r1, r2 = R_hat.shape[1], C_hat.shape[1]
    row_vals = np.asarray(row_vals, dtype=float)
    col_vals = np.asarray(col_vals, dtype=float)
    for vals, r, side in ((row_vals, r1, "row"), (col_vals, r2, "column")):
        top = vals[0] if vals.size else 0.0
        if not top > 0 or np.any(vals[:r] <= DEGENERATE_FLOOR * top):
            raise DegenerateEigenvalue(
                f"{side} eigenvalues {vals[:r]} are not bounded away from zero; "
                "the factor count exceeds the effective rank"
            )
    lam = {"row": row_vals[0], "col": col_vals[0], "sum": row_vals[0] + col_vals[0]}[normalization]
    core = R_hat.T @ as_series(X) @ C_hat
    return np.sqrt(lam) * core / np.sqrt(row_vals[:r1])[:, None] / np.sqrt(col_vals[:r2])[None, :]


def estimate_factors(X, R_hat, C_hat, row_eigvals, col_eigvals, normalization: str = "row") -> np.ndarray:
    """Adaptive factor estimate from level-covariance spectra.

    The spectra are those of the covariance matrices themselves; the extra
    ``1/T`` scaling is applied here.
    """
    X = as_series(X)
    T = X.shape[0]
    return scaled_factors(
        X, R_hat, C_hat, np.asarray(row_eigvals) / T, np.asarray(col_eigvals) / T, normalization
    )


def common_components(X, R_hat, C_hat) -> np.ndarray:
    """Double projection ``R R^T X_t C C^T``."""
    X = as_series(X)
    if R_hat.shape[0] != X.shape[1] or C_hat.shape[0] != X.shape[2]:
        raise ShapeMismatch(
            f"loadings {R_hat.shape}, {C_hat.shape} do not match series shape {X.shape[1:]}"
        )
    return R_hat @ (R_hat.T @ X @ C_hat) @ C_hat.T


def select_counts(row_vals, col_vals, p1, p2, r1, r2, K1, K2):
    """Resolve factor counts, running the ratio criterion where none was supplied."""
    row_sel = col_sel = None
    if r1 is None:
        if p1 == 1:
            r1 = 1
        else:
            row_sel = ratio_criterion(row_vals, default_k(p1) if K1 is None else K1)
            r1 = row_sel.r_hat
    if r2 is None:
        if p2 == 1:
            r2 = 1
        else:
            col_sel = ratio_criterion(col_vals, default_k(p2) if K2 is None else K2)
            r2 = col_sel.r_hat
    _check_rank(r1, p1, "r1")
    _check_rank(r2, p2, "r2")
    return r1, r2, row_sel, col_sel


def fit_mpca(
    X,
    r1: int | None = None,
    r2: int | None = None,
    K1: int | None = None,
    K2: int | None = None,
    normalization: str = "row",
    demean: bool = False,
    spectra_: tuple[EigenSystem, EigenSystem] | None = None,
) -> FactorFit:
    """Fit the mPCA estimator.

    Parameters
    ----------
    X : (T, p1, p2) array_like
        Observed matrix series, ``T >= 2``.
    r1, r2 : int, optional
        Factor counts.  Missing counts are chosen by the eigenvalue ratio
        criterion with upper bounds ``K1``, ``K2`` (default ``min(10, p - 1)``).
    normalization : {"row", "col", "sum"}
        Which leading eigenvalue scales the factor estimate.
    demean : bool
        Subtract the time mean before fitting.
    spectra_ : tuple of EigenSystem, optional
        Precomputed spectra of ``X`` (after any demeaning), to share one
        eigen-decomposition between several fits of the same data.
    """
    X = as_series(X)
    T, p1, p2 = X.shape
    if T < 2:
        raise TooShort(f"mPCA needs T >= 2, got T = {T}")
    if demean:
        X = _demean(X)
    row, col = spectra(X) if spectra_ is None else spectra_
    r1, r2, row_sel, col_sel = select_counts(row.values, col.values, p1, p2, r1, r2, K1, K2)
    R_hat = row.vectors[:, :r1]
    C_hat = col.vectors[:, :r2]
    F_hat = estimate_factors(X, R_hat, C_hat, row.values, col.values, normalization)
    return FactorFit(
        method="mPCA",
        r1=r1,
        r2=r2,
        R_hat=R_hat,
        C_hat=C_hat,
        F_hat=F_hat,
        row_eigvals=row.values,
        col_eigvals=col.values,
        normalization=normalization,
        demeaned=demean,
        row_selection=row_sel,
        col_selection=col_sel,
    )
