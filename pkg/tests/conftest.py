import numpy as np
import pytest

from matfactor.dgp import DgpConfig, make_rng, simulate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def noiseless_truth(T=60, p1=12, p2=10, r1=2, r2=2, factor_kind="i1", seed=7, **kw):
    cfg = DgpConfig(
        T=T, p1=p1, p2=p2, r1=r1, r2=r2, factor_kind=factor_kind,
        row_strengths=kw.pop("row_strengths", (1.0,) * r1),
        col_strengths=kw.pop("col_strengths", (1.0,) * r2),
        idio_scale=0.0, seed=seed, **kw,
    )
    return simulate(cfg)


def random_series(seed, T=20, p1=5, p2=4):
    return np.random.default_rng(seed).standard_normal((T, p1, p2))


# Acceptance lines are collected here and echoed in the terminal summary so
# they show up even when pytest captures stdout.
ACCEPTANCE_LINES = []
ACCEPTANCE_TABLE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_TABLE:
        terminalreporter.section("simulation table (200 replications)")
        for line in ACCEPTANCE_TABLE:
            terminalreporter.write_line(line)
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
