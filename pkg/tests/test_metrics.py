import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matfactor.dgp import DgpConfig, assemble, study_config, simulate
from matfactor.errors import DegenerateStack, Empty, RankDeficient, SingularV
from matfactor.metrics import (
    ReplicationScore,
    aggregate,
    aligned_loadings,
    factor_space_distance,
    projection_distance,
    rotation_oracle_mpanic,
    rotation_oracle_mpca,
)
from matfactor.mpanic import fit_mpanic
from matfactor.mpca import fit_mpca

from conftest import noiseless_truth


def orth(p, r, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((p, r)))
    return q


# -- projection distance -------------------------------------------------------------

def test_same_subspace_zero():
    Q = orth(8, 3, 0)
    O = orth(3, 3, 1)
    assert projection_distance(Q @ O, Q) < 1e-12
    assert projection_distance(Q, Q @ np.diag([2.0, -1.0, 5.0])) < 1e-12


def test_orthogonal_lines():
    assert projection_distance([[1.0], [0.0]], [[0.0], [1.0]]) == pytest.approx(np.sqrt(2), abs=1e-15)


def test_rank_deficient_basis():
    with pytest.raises(RankDeficient):
        projection_distance(orth(4, 2, 0), np.ones((4, 2)))


@settings(max_examples=60, deadline=None)
@given(p=st.integers(2, 10), r=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_pseudometric_axioms(p, r, seed):
    r = min(r, p)
    A, B, C = orth(p, r, seed), orth(p, r, seed + 1), orth(p, r, seed + 2)
    dab, dba = projection_distance(A, B), projection_distance(B, A)
    assert abs(dab - dba) < 1e-12
    assert projection_distance(A, A) < 1e-12
    assert projection_distance(A, C) <= dab + projection_distance(B, C) + 1e-10
    assert dab <= np.sqrt(2 * r) + 1e-12


@settings(max_examples=40, deadline=None)
@given(p=st.integers(2, 10), r=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_rotation_invariance(p, r, seed):
    r = min(r, p)
    A, B = orth(p, r, seed), orth(p, r, seed + 1)
    O1, O2 = orth(r, r, seed + 2), orth(r, r, seed + 3)
    assert abs(projection_distance(A @ O1, B @ O2) - projection_distance(A, B)) < 1e-10


# -- factor space distance -------------------------------------------------------------

def test_factor_space_linear_map():
    F = np.random.default_rng(0).standard_normal((40, 2, 3))
    M = np.random.default_rng(1).standard_normal((6, 6)) + 3 * np.eye(6)
    G = (F.reshape(40, 6) @ M).reshape(40, 3, 2)
    assert factor_space_distance(G, F) < 1e-8
    # a left/right rotation is one such map
    A, B = orth(2, 2, 3), orth(3, 3, 4)
    assert factor_space_distance(A @ F @ B, F) < 1e-8


def test_factor_space_orthogonal_paths():
    T, r = 20, 4
    Q = orth(T, 2 * r, 5)
    F1 = Q[:, :r].reshape(T, 2, 2)
    F2 = (Q[:, r:] @ np.diag([1, 2, 3, 4.0])).reshape(T, 2, 2)
    assert factor_space_distance(F1, F2) == pytest.approx(np.sqrt(2 * r), abs=1e-10)


def test_factor_space_degenerate():
    with pytest.raises(DegenerateStack):
        factor_space_distance(np.zeros((10, 2, 2)), np.ones((10, 2, 2)))
    F = np.zeros((10, 2, 2))
    F[:, 0, 0] = np.arange(10.0)
    with pytest.warns(RuntimeWarning):
        d = factor_space_distance(F, F)
    assert d < 1e-12


# -- rotation oracles ---------------------------------------------------------------------

def test_mpca_oracle_zero_noise_identity():
    truth = noiseless_truth(T=80, p1=20, p2=15)
    fit = fit_mpca(truth.X, r1=2, r2=2)
    H_R, H_C = rotation_oracle_mpca(truth, fit)
    np.testing.assert_allclose(fit.R_hat, 20 ** -0.5 * truth.R @ H_R, atol=1e-6)
    np.testing.assert_allclose(fit.C_hat, 15 ** -0.5 * truth.C @ H_C, atol=1e-6)


def test_mpca_oracle_heterogeneous_identity():
    truth = noiseless_truth(T=80, p1=20, p2=15, row_strengths=(1.0, 0.6), col_strengths=(1.0, 0.8))
    fit = fit_mpca(truth.X, r1=2, r2=2)
    H_R, H_C = rotation_oracle_mpca(truth, fit)
    a, b, c, d = aligned_loadings(truth, fit, H_R, H_C)
    np.testing.assert_allclose(a, b, atol=1e-6 * np.max(np.abs(a)))
    np.testing.assert_allclose(c, d, atol=1e-6 * np.max(np.abs(c)))


def test_mpca_oracle_scaling_consistency():
    truth = noiseless_truth(T=50, p1=12, p2=12)
    c = 3.7
    scaled = assemble(truth.R, truth.C, c * truth.F, c * truth.E, config=truth.config)
    fit, fit_c = fit_mpca(truth.X, r1=2, r2=2), fit_mpca(scaled.X, r1=2, r2=2)
    np.testing.assert_allclose(fit_c.row_eigvals[:2], c**2 * fit.row_eigvals[:2], rtol=1e-10)
    np.testing.assert_allclose(fit_c.R_hat, fit.R_hat, atol=1e-10)
    H, _ = rotation_oracle_mpca(truth, fit)
    Hc, _ = rotation_oracle_mpca(scaled, fit_c)
    np.testing.assert_allclose(Hc, H, rtol=1e-8)
    res = fit.R_hat - 12 ** -0.5 * truth.R @ H
    res_c = fit_c.R_hat - 12 ** -0.5 * scaled.R @ Hc
    assert np.max(np.abs(res - res_c)) < 1e-10


def test_mpca_oracle_invertible_on_noisy_fits():
    for seed in range(5):
        truth = simulate(study_config(100, 30, "i", seed=seed))
        H_R, H_C = rotation_oracle_mpca(truth, fit_mpca(truth.X, r1=2, r2=2))
        assert abs(np.linalg.det(H_R)) > 1e-8 and abs(np.linalg.det(H_C)) > 1e-8


@pytest.mark.parametrize("kind", ["rw", "ecm"])
def test_mpanic_oracle_zero_noise_identity(kind):
    extra = {}
    if kind == "rw":
        zero = ((0.0,), (0.0,))
        extra = dict(alpha1=zero, alpha2=zero)
    truth = noiseless_truth(T=80, p1=20, p2=15, factor_kind="ecm", **extra)
    fit = fit_mpanic(truth.X, r1=2, r2=2)
    H_R, H_C = rotation_oracle_mpanic(truth, fit)
    np.testing.assert_allclose(fit.R_hat, 20 ** -0.5 * truth.R @ H_R, atol=1e-6)
    np.testing.assert_allclose(fit.C_hat, 15 ** -0.5 * truth.C @ H_C, atol=1e-6)


def test_mpanic_oracle_constant_factors():
    truth = noiseless_truth(T=20, p1=6, p2=5)
    noise = np.random.default_rng(0).standard_normal(truth.E.shape)
    const = assemble(truth.R, truth.C, np.ones_like(truth.F), noise, config=truth.config)
    fit = fit_mpanic(const.X, r1=2, r2=2)
    with pytest.raises(SingularV):
        rotation_oracle_mpanic(const, fit)


def test_mpanic_oracle_invertible_on_noisy_fits():
    for seed in range(5):
        truth = simulate(study_config(100, 30, "i", factor_kind="ecm", seed=seed))
        H_R, H_C = rotation_oracle_mpanic(truth, fit_mpanic(truth.X, r1=2, r2=2))
        assert abs(np.linalg.det(H_R)) > 1e-8 and abs(np.linalg.det(H_C)) > 1e-8


# -- aggregate ---------------------------------------------------------------------------

def score(r1, r2=2, e=0.1, method="mPCA"):
    return ReplicationScore(e, 2 * e, 3 * e, r1, r2, method)


def test_aggregate_all_correct():
    res = aggregate([score(2), score(2)], 2, 2)
    assert res.cp_r1 == 1.0 and res.cp_r2 == 1.0 and res.reps == 2


def test_aggregate_arithmetic():
    res = aggregate([score(2), score(2), score(1), score(2)], 2, 2)
    assert res.mean_r1 == 1.75 and res.cp_r1 == 0.75


def test_aggregate_single():
    s = ReplicationScore(0.1, 0.2, 0.3, 2, 1, "mPANIC")
    res = aggregate([s], 2, 2, cell="x", seed=5)
    assert (res.rmse_R, res.rmse_C, res.rmse_F) == (0.1, 0.2, 0.3)
    assert (res.mean_r1, res.cp_r1, res.mean_r2, res.cp_r2) == (2.0, 1.0, 1.0, 0.0)
    assert res.method == "mPANIC" and res.seed == 5


def test_aggregate_empty():
    with pytest.raises(Empty):
        aggregate([], 2, 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 3, allow_nan=False), min_size=1, max_size=40), st.randoms())
def test_aggregate_permutation_invariant(errs, rnd):
    scores = [score(1 + i % 3, e=e) for i, e in enumerate(errs)]
    shuffled = scores[:]
    rnd.shuffle(shuffled)
    assert aggregate(scores, 2, 2) == aggregate(shuffled, 2, 2)
