"""Dense matrix primitives shared by the estimators.

Series are plain ``numpy`` arrays of shape ``(T, p1, p2)``; a single matrix
is a 2-D array.  Eigen-decompositions follow a fixed ordering and sign
convention so that fitted loadings are reproducible bit-for-bit.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    EmptySeries,
    NoConvergence,
    NonFinite,
    NonSymmetric,
    RankDeficient,
    ShapeMismatch,
    TooShort,
)

SYMMETRY_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
QR_PIVOT_TOL = 1e-12

_BACKENDS = ("jacobi", "lapack")
_default_backend = "jacobi"


class EigenSystem(NamedTuple):
    """Eigenvalues in descending order and matching unit eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def set_eig_backend(name: str) -> None:
    """Select the solver used by :func:`sym_eig` when none is passed."""
    global _default_backend
    if name not in _BACKENDS:
        raise ValueError(f"unknown eigensolver backend {name!r}; expected one of {_BACKENDS}")
    _default_backend = name


def get_eig_backend() -> str:
    return _default_backend


def as_series(X, name: str = "X") -> np.ndarray:
    """Validate and return a ``(T, p1, p2)`` float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise ShapeMismatch(f"{name} must have shape (T, p1, p2), got {X.shape}")
    if X.shape[0] < 1:
        raise EmptySeries(f"{name} has no time points")
    if X.shape[1] < 1 or X.shape[2] < 1:
        raise ShapeMismatch(f"{name} has an empty axis: {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return X


def symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


@lru_cache(maxsize=None)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # Tournament ordering: every pair (p, q), p < q, appears exactly once per
    # sweep, grouped into rounds of disjoint pairs that can be rotated together.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        order = np.argsort(ps, kind="stable")
        rounds.append((np.asarray(ps)[order], np.asarray(qs)[order]))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def jacobi_eigh(A: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Pairs are visited in round-robin order; each round applies a batch of
    disjoint plane rotations at once.  Iteration stops when the Frobenius norm
    of the off-diagonal part drops to ``tol * ||A||_F``.

    Returns
    -------
    values : (n,) ndarray
        Unsorted eigenvalues (the final diagonal).
    vectors : (n, n) ndarray
        Orthonormal eigenvectors, column ``k`` pairs with ``values[k]``.
    sweeps : int
        Number of completed sweeps.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V, 0
    threshold = tol * np.linalg.norm(A)
    rounds = _round_robin(n)
    off_mask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(A[off_mask] ** 2))
        if off <= threshold:
            return A.diagonal().copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            app = A[p, p]
            aqq = A[q, q]
            tau = np.zeros_like(apq)
            tau[active] = (aqq[active] - app[active]) / (2.0 * apq[active])
            t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t[~active] = 0.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # A <- J^T A J, V <- V J
            Ap, Aq = A[:, p], A[:, q]
            A[:, p], A[:, q] = c * Ap - s * Aq, s * Ap + c * Aq
            Ap, Aq = A[p, :], A[q, :]
            cc, ss = c[:, None], s[:, None]
            A[p, :], A[q, :] = cc * Ap - ss * Aq, ss * Ap + cc * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p], V[:, q]
            V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
    raise NoConvergence(
        f"Jacobi iteration did not converge after {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e} > {threshold:.3e})",
        iterations=max_sweeps,
    )


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so that the entry of largest magnitude is positive.

    Ties go to the lowest row index.
    """
    V = np.array(V, dtype=float)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eig(A, backend: str | None = None) -> EigenSystem:
    """Eigen-decomposition of a symmetric matrix.

    Values are sorted descending with a stable sort (equal values keep solver
    order); each eigenvector has its largest-magnitude entry positive.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix contains NaN or Inf")
    scale = 1.0 + (np.max(np.abs(A)) if A.size else 0.0)
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        raise NonSymmetric(f"matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL * scale:.3e}")
    A = symmetrize(A)
    backend = backend or _default_backend
    if backend == "jacobi":
        values, vectors, _ = jacobi_eigh(A)
    elif backend == "lapack":
        values, vectors = np.linalg.eigh(A)
    else:
        raise ValueError(f"unknown eigensolver backend {backend!r}")
    order = np.argsort(-values, kind="stable")
    return EigenSystem(values[order], fix_signs(vectors[:, order]))


def qr_orthonormalize(M) -> np.ndarray:
    """Orthonormal basis for the column span of ``M`` (``p x r``, ``p >= r``).

    The triangular factor is normalised to a positive diagonal, which makes the
    result unique.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise ShapeMismatch(f"expected a tall p x r matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFinite("matrix contains NaN or Inf")
    Q, R = np.linalg.qr(M, mode="reduced")
    d = np.diag(R)
    floor = QR_PIVOT_TOL * np.linalg.norm(M)
    if M.shape[1] and (np.min(np.abs(d)) <= floor or not np.any(M)):
        raise RankDeficient(
            f"column pivot {np.min(np.abs(d)):.3e} at or below {floor:.3e}; columns are dependent"
        )
    signs = np.where(d < 0, -1.0, 1.0)
    return Q * signs


def inv_sqrt_psd(A: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of a positive definite matrix."""
    vals, vecs = sym_eig(A)
    if vals[-1] <= 0:
        raise RankDeficient("matrix is not positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


def difference(X) -> np.ndarray:
    """First differences ``X[t+1] - X[t]``; length drops by one."""
    X = as_series(X)
    if X.shape[0] < 2:
        raise TooShort(f"differencing needs T >= 2, got T = {X.shape[0]}")
    return np.diff(X, axis=0)


def cumulate(D, start) -> np.ndarray:
    """Inverse of :func:`difference` given the first level ``start``."""
    D = np.asarray(D, dtype=float)
    start = np.asarray(start, dtype=float)
    return np.concatenate([start[None], start[None] + np.cumsum(D, axis=0)], axis=0)


def demean(X) -> np.ndarray:
    """Subtract the entrywise time mean."""
    X = as_series(X)
    return X - X.mean(axis=0, keepdims=True)
