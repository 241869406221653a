"""mPANIC: loadings from differenced data, factor levels from the levels.

Differencing removes both the stochastic trends in the factors and any unit
roots in the idiosyncratic errors, so the loading spans can be estimated as in
a stationary matrix factor model.  The factor matrices are then recovered by
projecting the undifferenced observations.
"""

from __future__ import annotations

import numpy as np

from .errors import TooShort
from .linalg import EigenSystem, as_series, demean as _demean, sym_eig
from .mpca import FactorFit, _clip, _outer_sums, scaled_factors, select_counts


def diff_covariances(X) -> tuple[np.ndarray, np.ndarray]:
    """Row and column covariances of the first differences.

    The ``T - 1`` available differences are summed and divided by ``T``.
    """
    X = as_series(X)
    T = X.shape[0]
    if T < 2:
        raise TooShort(f"differenced covariances need T >= 2, got T = {T}")
    D = np.diff(X, axis=0)
    return _outer_sums(D, T)


def diff_spectra(X) -> tuple[EigenSystem, EigenSystem]:
    row, col = diff_covariances(X)
    return _clip(sym_eig(row)), _clip(sym_eig(col))


def fit_mpanic(
    X,
    r1: int | None = None,
    r2: int | None = None,
    K1: int | None = None,
    K2: int | None = None,
    normalization: str = "row",
    demean: bool = False,
    spectra_: tuple[EigenSystem, EigenSystem] | None = None,
) -> FactorFit:
    """Fit the mPANIC estimator; arguments as in :func:`matfactor.mpca.fit_mpca`.

    Eigenvalues stored on the fit are those of the differenced covariances and
    enter the factor normalisation without any further ``1/T`` scaling.
    """
    X = as_series(X)
    T, p1, p2 = X.shape
    if T < 2:
        raise TooShort(f"mPANIC needs T >= 2, got T = {T}")
    if demean:
        X = _demean(X)
    row, col = diff_spectra(X) if spectra_ is None else spectra_
    r1, r2, row_sel, col_sel = select_counts(row.values, col.values, p1, p2, r1, r2, K1, K2)
    R_bar = row.vectors[:, :r1]
    C_bar = col.vectors[:, :r2]
    F_bar = scaled_factors(X, R_bar, C_bar, row.values, col.values, normalization)
    return FactorFit(
        method="mPANIC",
        r1=r1,
        r2=r2,
        R_hat=R_bar,
        C_hat=C_bar,
        F_hat=F_bar,
        row_eigvals=row.values,
        col_eigvals=col.values,
        normalization=normalization,
        demeaned=demean,
        row_selection=row_sel,
        col_selection=col_sel,
    )
