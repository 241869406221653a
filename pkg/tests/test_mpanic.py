import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matfactor.dgp import DgpConfig, simulate
from matfactor.errors import AllZero, TooShort
from matfactor.linalg import difference
from matfactor.metrics import projection_distance
from matfactor.mpanic import diff_covariances, fit_mpanic
from matfactor.mpca import row_covariance, scaled_factors

from conftest import noiseless_truth, random_series


def test_diff_covariance_constant():
    R, C = diff_covariances(np.full((5, 3, 2), 2.0))
    assert not np.any(R) and not np.any(C)


def test_diff_covariance_linear_trend():
    X = np.arange(1, 4)[:, None, None] * np.eye(2)
    R, C = diff_covariances(X)
    np.testing.assert_allclose(R, 2 / 3 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(C, 2 / 3 * np.eye(2), atol=1e-15)


def test_diff_covariance_composition():
    X = random_series(1, T=11, p1=4, p2=3)
    R, _ = diff_covariances(X)
    np.testing.assert_allclose(R, row_covariance(difference(X)) * 10 / 11, atol=1e-13)


def test_diff_covariance_too_short():
    with pytest.raises(TooShort):
        diff_covariances(np.ones((1, 2, 2)))


def test_noiseless_random_walk_recovery():
    zero = ((0.0,), (0.0,))
    truth = noiseless_truth(factor_kind="ecm", alpha1=zero, alpha2=zero)
    fit = fit_mpanic(truth.X, r1=2, r2=2)
    assert projection_distance(fit.R_hat, truth.U_R) < 1e-6
    assert projection_distance(fit.C_hat, truth.V_C) < 1e-6
    fit_sel = fit_mpanic(truth.X)
    assert (fit_sel.r1, fit_sel.r2) == (2, 2)


def test_noiseless_cointegrated_recovery():
    truth = noiseless_truth(factor_kind="ecm", T=80)
    fit = fit_mpanic(truth.X, r1=2, r2=2)
    assert projection_distance(fit.R_hat, truth.U_R) < 1e-6


def test_constant_series_all_zero():
    with pytest.raises(AllZero):
        fit_mpanic(np.full((6, 3, 3), 1.5))


def test_factor_levels_use_levels():
    X = random_series(2, T=10, p1=5, p2=4)
    fit = fit_mpanic(X, r1=2, r2=2)
    expected = scaled_factors(X, fit.R_hat, fit.C_hat, fit.row_eigvals, fit.col_eigvals)
    np.testing.assert_array_equal(fit.F_hat, expected)
    lam = fit.row_eigvals[0]
    t = 4
    manual = np.sqrt(lam) * np.diag(fit.row_eigvals[:2] ** -0.5) @ fit.R_hat.T @ X[t] @ fit.C_hat \
        @ np.diag(fit.col_eigvals[:2] ** -0.5)
    np.testing.assert_allclose(fit.F_hat[t], manual, rtol=1e-12)
    assert fit.method == "mPANIC"


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), shift=st.floats(-100, 100))
def test_shift_invariance(seed, shift):
    X = random_series(seed, T=12, p1=5, p2=4)
    M = np.random.default_rng(seed + 1).standard_normal((5, 4)) * shift
    a, b = fit_mpanic(X), fit_mpanic(X + M)
    assert (a.r1, a.r2) == (b.r1, b.r2)
    np.testing.assert_allclose(a.row_eigvals, b.row_eigvals, rtol=1e-9, atol=1e-9 * a.row_eigvals[0])
    np.testing.assert_allclose(a.R_hat, b.R_hat, atol=1e-8)
    np.testing.assert_allclose(a.C_hat, b.C_hat, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_transpose_duality(seed):
    X = random_series(seed, T=12, p1=6, p2=4)
    a, b = fit_mpanic(X), fit_mpanic(np.swapaxes(X, 1, 2))
    assert (a.r1, a.r2) == (b.r2, b.r1)
    np.testing.assert_allclose(a.R_hat, b.C_hat, atol=1e-10)
    np.testing.assert_allclose(a.col_eigvals, b.row_eigvals, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_time_reversal(seed):
    X = random_series(seed, T=9, p1=4, p2=3)
    a, b = diff_covariances(X), diff_covariances(X[::-1])
    np.testing.assert_allclose(np.linalg.eigvalsh(a[0]), np.linalg.eigvalsh(b[0]), atol=1e-12)
    np.testing.assert_allclose(a[0], b[0], atol=1e-12)


def test_mpca_beats_mpanic_on_i1_data():
    # levels estimation converges faster when all factors are integrated
    errs = {"mPCA": [], "mPANIC": []}
    from matfactor.mpca import fit_mpca
    for seed in range(10):
        truth = simulate(DgpConfig(T=100, p1=20, p2=20, seed=seed))
        errs["mPCA"].append(projection_distance(fit_mpca(truth.X, r1=2, r2=2).R_hat, truth.U_R))
        errs["mPANIC"].append(projection_distance(fit_mpanic(truth.X, r1=2, r2=2).R_hat, truth.U_R))
    assert np.mean(errs["mPCA"]) < np.mean(errs["mPANIC"])
