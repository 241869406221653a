"""Accuracy measures and truth-side diagnostics.

Loadings and factors are identified only up to invertible rotations, so
accuracy is measured between projection matrices onto column spaces.  The
rotation oracles reproduce the data-dependent rotations under which the
normalised estimates line up with the true loadings; they need the true
factors and strengths and are for simulated data only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateStack, Empty, ShapeMismatch, SingularV
from .linalg import qr_orthonormalize

SINGULAR_FLOOR = 1e-12
STACK_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ReplicationScore:
    rmse_R: float
    rmse_C: float
    rmse_F: float
    r1_hat: int
    r2_hat: int
    method: str
    # scores of the fit at the selected counts, filled only on request
    rmse_R_sel: Optional[float] = None
    rmse_C_sel: Optional[float] = None
    rmse_F_sel: Optional[float] = None


@dataclass(frozen=True)
class McResult:
    cell: str
    method: str
    rmse_R: float
    rmse_C: float
    rmse_F: float
    mean_r1: float
    cp_r1: float
    mean_r2: float
    cp_r2: float
    reps: int
    seed: int
    failed: int = 0
    rmse_R_sel: Optional[float] = None
    rmse_C_sel: Optional[float] = None
    rmse_F_sel: Optional[float] = None


def projection_distance(A, B_basis) -> float:
    """``||A A^T - Q Q^T||_F`` with ``Q`` an orthonormal basis of ``span(B_basis)``.

    ``A`` must already have orthonormal columns.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B_basis, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[0] != B.shape[0]:
        raise ShapeMismatch(f"row counts differ: {A.shape} vs {B.shape}")
    Q = qr_orthonormalize(B)
    return float(np.linalg.norm(A @ A.T - Q @ Q.T))


def _path_basis(F: np.ndarray, k: int, label: str) -> np.ndarray:
    S = F.reshape(F.shape[0], -1)
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateStack(f"{label} factor paths are identically zero")
    rank = int(np.sum(s > STACK_RANK_TOL * s[0]))
    if rank < k:
        warnings.warn(
            f"{label} factor stack has numerical rank {rank} < {k}; comparing a rank-{rank} subspace",
            RuntimeWarning,
            stacklevel=3,
        )
        k = rank
    return U[:, :k]


def factor_space_distance(F_hat, F_true) -> float:
    """Projection distance between the path spaces spanned by two factor series.

    Each series is stacked as a ``T x (r1 r2)`` matrix (one flattened ``F_t``
    per row) and its left singular subspace compared.
    """
    F_hat = np.asarray(F_hat, dtype=float)
    F_true = np.asarray(F_true, dtype=float)
    if F_hat.shape[0] != F_true.shape[0]:
        raise ShapeMismatch(f"series lengths differ: {F_hat.shape[0]} vs {F_true.shape[0]}")
    k_hat = int(np.prod(F_hat.shape[1:]))
    k_true = int(np.prod(F_true.shape[1:]))
    if k_hat > F_hat.shape[0] or k_true > F_true.shape[0]:
        raise DegenerateStack("fewer time points than factor entries")
    A = _path_basis(F_hat, k_hat, "estimated")
    B = _path_basis(F_true, k_true, "true")
    return float(np.linalg.norm(A @ A.T - B @ B.T))


def _strength_exponents(truth, side: str) -> np.ndarray:
    cfg = truth.config
    return np.asarray(cfg.row_strengths if side == "row" else cfg.col_strengths, dtype=float)


def _inverse_diag(values: np.ndarray, what: str) -> np.ndarray:
    if np.any(values <= SINGULAR_FLOOR * max(float(np.max(np.abs(values))), 0.0)) or not np.all(values > 0):
        raise SingularV(f"{what} has an eigenvalue at or below the floor: {values}")
    return np.diag(1.0 / values)


def _rotation(gram_row, gram_col, truth, fit, row_vals, col_vals):
    """Shared body of both oracles.

    ``gram_row``/``gram_col`` are the factor Gram sums already divided by the
    time normaliser; ``row_vals``/``col_vals`` the leading fitted eigenvalues
    divided by the same time normaliser.
    """
    cfg = truth.config
    p1, p2 = cfg.p1, cfg.p2
    a_R = _strength_exponents(truth, "row")
    a_C = _strength_exponents(truth, "col")
    if fit.r1 != cfg.r1 or fit.r2 != cfg.r2:
        raise ShapeMismatch("rotation oracles need the fit to use the true factor counts")
    R, C = truth.R, truth.C
    homogeneous = np.all(a_R == a_R[0]) and np.all(a_C == a_C[0])
    if homogeneous:
        aR, aC = a_R[0], a_C[0]
        V_R = row_vals / (p1**aR * p2**aC)
        V_C = col_vals / (p1**aR * p2**aC)
        H_R = (gram_row / p2**aC) @ (p1 ** (-aR / 2) * R.T @ fit.R_hat) @ _inverse_diag(V_R, "V_R")
        H_C = (gram_col / p1**aR) @ (p2 ** (-aC / 2) * C.T @ fit.C_hat) @ _inverse_diag(V_C, "V_C")
    else:
        B_R = np.diag(p1 ** (a_R / 2))
        B_C = np.diag(p2 ** (a_C / 2))
        V_R = p2 ** (-a_C[0]) * np.diag(B_R) ** -2 * row_vals
        V_C = p1 ** (-a_R[0]) * np.diag(B_C) ** -2 * col_vals
        H_R = (gram_row / p2 ** a_C[0]) @ (R.T @ fit.R_hat @ np.linalg.inv(B_R)) @ _inverse_diag(V_R, "V_R")
        H_C = (gram_col / p1 ** a_R[0]) @ (C.T @ fit.C_hat @ np.linalg.inv(B_C)) @ _inverse_diag(V_C, "V_C")
    return H_R, H_C


def _gram(F: np.ndarray, L: np.ndarray) -> np.ndarray:
    """``sum_t F_t L^T L F_t^T``."""
    M = F @ (L.T @ L)
    return np.sum(M @ np.swapaxes(F, 1, 2), axis=0)


def _check_gram(G: np.ndarray, what: str) -> None:
    top = float(np.max(np.abs(G))) if G.size else 0.0
    if top == 0.0:
        raise SingularV(f"{what} Gram term is zero")


def rotation_oracle_mpca(truth, fit):
    """Rotations ``(H_R, H_C)`` linking an mPCA fit to the true loadings.

    With homogeneous strengths and no noise, ``R_hat = p1^{-a_R/2} R H_R``
    holds exactly; with heterogeneous strengths the identity reads
    ``R_hat B_R = R H_R``.
    """
    F, R, C = truth.F, truth.R, truth.C
    T = F.shape[0]
    gram_row = _gram(F, C) / T**2
    gram_col = _gram(np.swapaxes(F, 1, 2), R) / T**2
    _check_gram(gram_row, "row")
    _check_gram(gram_col, "column")
    return _rotation(
        gram_row, gram_col, truth, fit, fit.row_eigvals[: fit.r1] / T, fit.col_eigvals[: fit.r2] / T
    )


def rotation_oracle_mpanic(truth, fit):
    """Rotations ``(H_R, H_C)`` linking an mPANIC fit to the true loadings.

    Uses the ``T - 1`` factor differences matching the differenced covariance,
    divided by ``T``; the fitted eigenvalues enter without extra scaling.
    """
    F, R, C = truth.F, truth.R, truth.C
    T = F.shape[0]
    dF = np.diff(F, axis=0)
    gram_row = _gram(dF, C) / T
    gram_col = _gram(np.swapaxes(dF, 1, 2), R) / T
    _check_gram(gram_row, "row")
    _check_gram(gram_col, "column")
    return _rotation(gram_row, gram_col, truth, fit, fit.row_eigvals[: fit.r1], fit.col_eigvals[: fit.r2])


def aligned_loadings(truth, fit, H_R, H_C):
    """Normalised estimates and their rotated truth, for alignment checks.

    Returns ``(R_tilde, R H_R, C_tilde, C H_C)``; the pairs coincide in the
    noiseless case.
    """
    cfg = truth.config
    a_R = np.asarray(cfg.row_strengths)
    a_C = np.asarray(cfg.col_strengths)
    B_R = np.diag(cfg.p1 ** (a_R / 2))
    B_C = np.diag(cfg.p2 ** (a_C / 2))
    return fit.R_hat @ B_R, truth.R @ H_R, fit.C_hat @ B_C, truth.C @ H_C


def _mean(values: Sequence[float]) -> float:
    # exactly rounded, so independent of summation order
    return math.fsum(values) / len(values)


def aggregate(scores: Sequence[ReplicationScore], r1_true: int, r2_true: int,
              cell: str = "", seed: int = 0, failed: int = 0) -> McResult:
    """Average replication scores into one table row."""
    scores = list(scores)
    if not scores:
        raise Empty("no replication scores to aggregate")
    opt = {}
    for name in ("rmse_R_sel", "rmse_C_sel", "rmse_F_sel"):
        vals = [getattr(s, name) for s in scores]
        opt[name] = _mean(vals) if all(v is not None for v in vals) else None
    return McResult(
        cell=cell,
        method=scores[0].method,
        rmse_R=_mean([s.rmse_R for s in scores]),
        rmse_C=_mean([s.rmse_C for s in scores]),
        rmse_F=_mean([s.rmse_F for s in scores]),
        mean_r1=_mean([s.r1_hat for s in scores]),
        cp_r1=_mean([float(s.r1_hat == r1_true) for s in scores]),
        mean_r2=_mean([s.r2_hat for s in scores]),
        cp_r2=_mean([float(s.r2_hat == r2_true) for s in scores]),
        reps=len(scores),
        seed=seed,
        failed=failed,
        **opt,
    )
