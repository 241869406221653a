"""Simulation designs for nonstationary matrix factor models.

Randomness comes from a counter-based Philox stream keyed by a tuple of
integers, e.g. ``(base_seed, cell, method, replication)``, so each replication
owns an independent stream regardless of execution order.  Normal draws are
produced by Box-Muller from that uniform stream:

    u1, u2 <- consecutive uniforms on [0, 1)
    z0 = sqrt(-2 log(1 - u1)) * cos(2 pi u2)
    z1 = sqrt(-2 log(1 - u1)) * sin(2 pi u2)

and the outputs are emitted in the order z0, z1, z0', z1', ... (a trailing
odd draw discards its sine partner).

Within one replication the draws happen in a fixed order: row-loading basis,
column-loading basis, factor innovations ``(T, r1, r2)``, idiosyncratic
innovations ``(T, p1, p2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, RankDeficient, ShapeMismatch, UnstableECM
from .linalg import qr_orthonormalize, sym_eig

ECM_MARGIN = 1e-8
LOADING_RETRIES = 5

# Parameters of the simulation study
STUDY_ALPHA1 = ((-0.1,), (0.1,))
STUDY_BETA1 = ((1.0,), (-1.0,))
STUDY_ALPHA2 = ((0.1,), (-0.1,))
STUDY_BETA2 = ((1.0,), (-1.0,))
STRENGTH_CASES = {
    "i": (1.0, 1.0),
    "ii": (1.0, 0.8),
    "iii": (1.0, 0.6),
}


def make_rng(*key: int) -> np.random.Generator:
    """Philox generator keyed by a tuple of non-negative integers."""
    if not key:
        raise ValueError("at least one key component is required")
    words = [int(k) for k in key]
    if any(k < 0 for k in words):
        raise ValueError(f"seed components must be non-negative, got {key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Box-Muller standard normals drawn from ``rng``'s uniform stream."""
    shape = (int(shape),) if np.isscalar(shape) else tuple(int(d) for d in shape)
    n = int(np.prod(shape, dtype=np.int64))
    m = (n + 1) // 2
    u = rng.random(2 * m)
    radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    angle = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * m)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n].reshape(shape)


def _as_matrix(a, name) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ConfigError(f"{name} must be a matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class DgpConfig:
    """Configuration of one simulated matrix factor model.

    ``factor_kind`` is ``"i1"`` (full-rank integrated factors with AR(1)
    increments) or ``"ecm"`` (cointegrated factors from the matrix
    error-correction model).  ``row_strengths`` / ``col_strengths`` give one
    exponent in (0, 1] per factor; loading column ``k`` has norm
    ``p ** (alpha_k / 2)``.  Entries in the top-left ``nonstat_block`` of the
    error matrix are random walks, all others AR(1) with ``idio_ar``.
    ``idio_scale`` multiplies the error innovations (0 gives noiseless data).
    """

    T: int = 100
    p1: int = 30
    p2: int = 30
    r1: int = 2
    r2: int = 2
    factor_kind: str = "i1"
    factor_ar: float = 0.3
    alpha1: tuple = STUDY_ALPHA1
    beta1: tuple = STUDY_BETA1
    alpha2: tuple = STUDY_ALPHA2
    beta2: tuple = STUDY_BETA2
    row_strengths: tuple = (1.0, 1.0)
    col_strengths: tuple = (1.0, 1.0)
    idio_ar: float = 0.3
    cross_base: float = 0.5
    nonstat_block: tuple = (0, 0)
    idio_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "row_strengths", tuple(float(a) for a in self.row_strengths))
        object.__setattr__(self, "col_strengths", tuple(float(a) for a in self.col_strengths))
        object.__setattr__(self, "nonstat_block", tuple(int(s) for s in self.nonstat_block))
        for name in ("alpha1", "beta1", "alpha2", "beta2"):
            m = _as_matrix(getattr(self, name), name)
            object.__setattr__(self, name, tuple(tuple(float(v) for v in row) for row in m))
        self.validate()

    def validate(self) -> None:
        for name in ("T", "p1", "p2", "r1", "r2"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.r1 > self.p1 or self.r2 > self.p2:
            raise ConfigError("factor counts cannot exceed the matrix dimensions")
        if len(self.row_strengths) != self.r1 or len(self.col_strengths) != self.r2:
            raise ConfigError("need one strength per factor on each side")
        for a in self.row_strengths + self.col_strengths:
            if not 0.0 < a <= 1.0:
                raise ConfigError(f"factor strengths must lie in (0, 1], got {a}")
        s_R, s_C = self.nonstat_block
        if not (0 <= s_R <= self.p1 and 0 <= s_C <= self.p2):
            raise ConfigError(f"nonstat_block {self.nonstat_block} out of range")
        if self.factor_kind not in ("i1", "ecm"):
            raise ConfigError(f"factor_kind must be 'i1' or 'ecm', got {self.factor_kind!r}")
        if not abs(self.factor_ar) < 1 or not abs(self.idio_ar) < 1 or not abs(self.cross_base) < 1:
            raise ConfigError("AR and cross-correlation coefficients must be below 1 in absolute value")
        if self.idio_scale < 0:
            raise ConfigError("idio_scale must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.factor_kind == "ecm":
            a1, b1 = np.asarray(self.alpha1), np.asarray(self.beta1)
            a2, b2 = np.asarray(self.alpha2), np.asarray(self.beta2)
            for a, b, r, j in ((a1, b1, self.r1, 1), (a2, b2, self.r2, 2)):
                if a.shape != b.shape or a.shape[0] != r or not 1 <= a.shape[1] <= r:
                    raise ConfigError(
                        f"alpha{j}, beta{j} must both be r{j} x k{j} with 1 <= k{j} <= r{j}; "
                        f"got {a.shape} and {b.shape}"
                    )

    def with_(self, **changes) -> "DgpConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = [list(x) if isinstance(x, tuple) else x for x in v]
        return d


@dataclass(frozen=True)
class DgpTruth:
    R: np.ndarray
    C: np.ndarray
    U_R: np.ndarray
    V_C: np.ndarray
    B_R: np.ndarray
    B_C: np.ndarray
    F: np.ndarray
    E: np.ndarray
    X: np.ndarray
    config: DgpConfig = field(default_factory=DgpConfig)

    @property
    def Z(self) -> np.ndarray:
        return self.R @ self.F @ self.C.T


def strength_matrix(p: int, strengths: Sequence[float]) -> np.ndarray:
    return np.diag(np.power(float(p), np.asarray(strengths, dtype=float) / 2.0))


def gen_loadings(p: int, r: int, strengths, rng, basis=None):
    """Random loading matrix ``U diag(p^{alpha_k/2})`` with orthonormal ``U``.

    ``U`` is the Q factor of a ``p x r`` standard-normal draw; pass ``basis``
    to plant a fixed orthonormal ``U`` instead.  Returns ``(loading, U)``.
    """
    if not 1 <= r <= p:
        raise ShapeMismatch(f"need 1 <= r <= p, got r={r}, p={p}")
    if len(strengths) != r:
        raise ShapeMismatch(f"need {r} strengths, got {len(strengths)}")
    B = strength_matrix(p, strengths)
    if basis is not None:
        U = np.asarray(basis, dtype=float)
        return U @ B, U
    for _ in range(LOADING_RETRIES):
        try:
            U = qr_orthonormalize(standard_normal(rng, (p, r)))
        except RankDeficient:
            continue
        return U @ B, U
    raise RankDeficient(f"could not draw a full-rank {p} x {r} basis in {LOADING_RETRIES} attempts")


def gen_factors_i1(T: int, r1: int, r2: int, ar_coef: float, rng=None, innovations=None) -> np.ndarray:
    """Integrated factors ``F_t = F_{t-1} + U_t`` with AR(1) increments.

    ``F_0 = 0`` and ``U_0 = 0``; returns ``F_1 .. F_T``.
    """
    if not abs(ar_coef) < 1:
        raise ConfigError("AR coefficient must be below 1 in absolute value")
    eps = standard_normal(rng, (T, r1, r2)) if innovations is None else np.asarray(innovations, float)
    u = np.empty_like(eps)
    prev = np.zeros((r1, r2))
    for t in range(T):
        prev = ar_coef * prev + eps[t]
        u[t] = prev
    return np.cumsum(u, axis=0)


def ecm_companion(alpha1, beta1, alpha2, beta2) -> np.ndarray:
    """``I + beta^T alpha`` with ``alpha = alpha2 (x) alpha1``, ``beta = beta2 (x) beta1``."""
    alpha = np.kron(_as_matrix(alpha2, "alpha2"), _as_matrix(alpha1, "alpha1"))
    beta = np.kron(_as_matrix(beta2, "beta2"), _as_matrix(beta1, "beta1"))
    return np.eye(beta.shape[1]) + beta.T @ alpha


def check_ecm_stability(alpha1, beta1, alpha2, beta2) -> float:
    """Largest eigenvalue modulus of the companion; raises ``UnstableECM`` if too large."""
    moduli = np.abs(np.linalg.eigvals(ecm_companion(alpha1, beta1, alpha2, beta2)))
    top = float(moduli.max())
    if not top < 1.0 - ECM_MARGIN:
        raise UnstableECM(f"error-correction companion has eigenvalue modulus {top:.6g} >= 1")
    return top


def gen_factors_ecm(T: int, alpha1, beta1, alpha2, beta2, rng=None, innovations=None) -> np.ndarray:
    """Cointegrated factors ``dF_t = A1 F_{t-1} A2^T + V_t`` with ``F_0 = 0``."""
    alpha1, beta1 = _as_matrix(alpha1, "alpha1"), _as_matrix(beta1, "beta1")
    alpha2, beta2 = _as_matrix(alpha2, "alpha2"), _as_matrix(beta2, "beta2")
    if np.any(alpha1) and np.any(alpha2):
        # zero adjustment matrices switch error correction off (pure random walk)
        check_ecm_stability(alpha1, beta1, alpha2, beta2)
    A1 = alpha1 @ beta1.T
    A2 = alpha2 @ beta2.T
    r1, r2 = A1.shape[0], A2.shape[0]
    V = standard_normal(rng, (T, r1, r2)) if innovations is None else np.asarray(innovations, float)
    F = np.empty_like(V)
    prev = np.zeros((r1, r2))
    for t in range(T):
        prev = prev + A1 @ prev @ A2.T + V[t]
        F[t] = prev
    return F


def vec(F: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation; works on a single matrix or a series."""
    F = np.asarray(F)
    if F.ndim == 2:
        return F.T.reshape(-1)
    return np.swapaxes(F, -1, -2).reshape(F.shape[0], -1)


def cointegration_rotation(beta1, beta2) -> tuple[np.ndarray, np.ndarray]:
    """Split ``vec(F)`` space into integrated and cointegrating directions.

    Returns ``(P1, P2)``: ``P2 = beta (beta^T beta)^{-1/2}`` spans the
    cointegrating relations and ``P1`` is an orthonormal basis of their
    orthogonal complement, so ``P = [P1, P2]`` is orthogonal.
    """
    beta = np.kron(_as_matrix(beta2, "beta2"), _as_matrix(beta1, "beta1"))
    n, k = beta.shape
    gram = sym_eig(beta.T @ beta)
    if gram.values[-1] <= 1e-12 * max(gram.values[0], 1e-300):
        raise RankDeficient("beta = beta2 (x) beta1 does not have full column rank")
    inv_root = (gram.vectors / np.sqrt(gram.values)) @ gram.vectors.T
    P2 = beta @ inv_root
    if k == n:
        return np.zeros((n, 0)), P2
    # eigenvectors of I - P2 P2^T with eigenvalue 1 span the complement
    comp = sym_eig(np.eye(n) - P2 @ P2.T)
    P1 = comp.vectors[:, : n - k]
    return P1, P2


def toeplitz_corr(p: int, base: float) -> np.ndarray:
    idx = np.arange(p)
    return np.power(float(base), np.abs(idx[:, None] - idx[None, :]))


def gen_idio(
    T: int,
    p1: int,
    p2: int,
    ar_coef: float,
    cross_base: float,
    nonstat_block=(0, 0),
    rng=None,
    innovations=None,
    scale: float = 1.0,
) -> np.ndarray:
    """Idiosyncratic errors with Toeplitz cross-correlation and a random-walk block.

    Innovations are ``L_R Xi_t L_C^T`` with Cholesky factors of the
    ``cross_base^{|i-j|}`` matrices.  Entries in the top-left
    ``s_R x s_C`` block follow ``e_t = e_{t-1} + n_t``; the rest follow
    ``e_t = ar_coef * e_{t-1} + n_t``.  ``E_0 = 0``.
    """
    if not abs(ar_coef) < 1 or not abs(cross_base) < 1:
        raise ConfigError("AR and cross-correlation coefficients must be below 1 in absolute value")
    s_R, s_C = (int(s) for s in nonstat_block)
    if not (0 <= s_R <= p1 and 0 <= s_C <= p2):
        raise ConfigError(f"nonstat_block {nonstat_block} out of range")
    if innovations is None:
        xi = standard_normal(rng, (T, p1, p2))
    else:
        xi = np.asarray(innovations, dtype=float)
    L_R = np.linalg.cholesky(toeplitz_corr(p1, cross_base))
    L_C = np.linalg.cholesky(toeplitz_corr(p2, cross_base))
    N = scale * (L_R @ xi @ L_C.T)
    coef = np.full((p1, p2), float(ar_coef))
    coef[:s_R, :s_C] = 1.0
    E = np.empty_like(N)
    prev = np.zeros((p1, p2))
    for t in range(T):
        prev = coef * prev + N[t]
        E[t] = prev
    return E


def assemble(R, C, F, E, U_R=None, V_C=None, B_R=None, B_C=None, config=None) -> DgpTruth:
    """Combine the parts into ``X_t = R F_t C^T + E_t``."""
    R, C, F, E = (np.asarray(a, dtype=float) for a in (R, C, F, E))
    T = F.shape[0]
    if F.ndim != 3 or F.shape[1:] != (R.shape[1], C.shape[1]):
        raise ShapeMismatch(f"factor shape {F.shape} does not match loadings {R.shape}, {C.shape}")
    if E.shape != (T, R.shape[0], C.shape[0]):
        raise ShapeMismatch(f"error shape {E.shape} does not match {(T, R.shape[0], C.shape[0])}")
    X = R @ F @ C.T + E
    return DgpTruth(
        R=R,
        C=C,
        U_R=R if U_R is None else U_R,
        V_C=C if V_C is None else V_C,
        B_R=np.eye(R.shape[1]) if B_R is None else B_R,
        B_C=np.eye(C.shape[1]) if B_C is None else B_C,
        F=F,
        E=E,
        X=X,
        config=config if config is not None else DgpConfig(
            T=T, p1=R.shape[0], p2=C.shape[0], r1=R.shape[1], r2=C.shape[1],
            row_strengths=(1.0,) * R.shape[1], col_strengths=(1.0,) * C.shape[1],
        ),
    )


def simulate(config: DgpConfig, rng: np.random.Generator | None = None) -> DgpTruth:
    """Draw one dataset from ``config`` (keyed by ``config.seed`` unless ``rng`` is given)."""
    rng = make_rng(config.seed) if rng is None else rng
    c = config
    R, U_R = gen_loadings(c.p1, c.r1, c.row_strengths, rng)
    C, V_C = gen_loadings(c.p2, c.r2, c.col_strengths, rng)
    if c.factor_kind == "i1":
        F = gen_factors_i1(c.T, c.r1, c.r2, c.factor_ar, rng)
    else:
        F = gen_factors_ecm(c.T, c.alpha1, c.beta1, c.alpha2, c.beta2, rng)
    E = gen_idio(c.T, c.p1, c.p2, c.idio_ar, c.cross_base, c.nonstat_block, rng, scale=c.idio_scale)
    return assemble(
        R, C, F, E,
        U_R=U_R, V_C=V_C,
        B_R=strength_matrix(c.p1, c.row_strengths),
        B_C=strength_matrix(c.p2, c.col_strengths),
        config=c,
    )


def study_config(T: int, p: int, case: str = "i", factor_kind: str = "i1", **overrides) -> DgpConfig:
    """The simulation-study design for one ``(T, p1 = p2 = p, strength case)`` cell."""
    try:
        strengths = STRENGTH_CASES[case]
    except KeyError:
        raise ConfigError(f"unknown strength case {case!r}; expected one of {sorted(STRENGTH_CASES)}")
    base = dict(
        T=T, p1=p, p2=p, r1=2, r2=2, factor_kind=factor_kind,
        row_strengths=strengths, col_strengths=strengths,
    )
    base.update(overrides)
    return DgpConfig(**base)
