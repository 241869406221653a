"""Acceptance criteria, one test (and one PASS/FAIL line) per criterion.

The full simulation table is computed once per module at 200 replications
with the bundled design's seeds.
"""

import time

import numpy as np
import pytest

from matfactor.config import bundled_design_path, load_design
from matfactor.dgp import (
    STUDY_ALPHA1,
    STUDY_ALPHA2,
    STUDY_BETA1,
    STUDY_BETA2,
    cointegration_rotation,
    gen_factors_ecm,
    make_rng,
    standard_normal,
    vec,
)
from matfactor.montecarlo import McCell, results_to_text, run_design

from conftest import ACCEPTANCE_LINES, ACCEPTANCE_TABLE

REPS = 200


def report(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


@pytest.fixture(scope="module")
def table():
    design = load_design(bundled_design_path())
    assert design.replications == REPS
    from dataclasses import replace

    stamps = {}
    start = time.perf_counter()

    def stamp(res):
        stamps[(res.cell, res.method)] = time.perf_counter() - start

    results = run_design(replace(design, methods=("mPCA",)), on_result=stamp)
    results += run_design(replace(design, methods=("mPANIC",)))
    ACCEPTANCE_TABLE.extend(results_to_text(results).rstrip("\n").split("\n"))
    out = {(r.cell, r.method): r for r in results}
    out["panel_a_case_i_seconds"] = stamps[(McCell(100, 60, 60, "i").name, "mPCA")]
    return out


def cell(T, p, case):
    return McCell(T, p, p, case).name


CASE_I = ((50, 30), (100, 30), (100, 60))


def test_criterion_1_mpca_case_i(table):
    targets = {(50, 30): (0.008, 0.004), (100, 30): (0.004, 0.002), (100, 60): (0.003, 0.002)}
    ok, parts = True, []
    for (T, p), (centre, band) in targets.items():
        r = table[(cell(T, p, "i"), "mPCA")]
        good = abs(r.rmse_R - centre) <= band and r.cp_r1 >= 0.98 and r.cp_r2 >= 0.98
        ok &= good
        parts.append(f"T={T},p={p} RMSE(R)={r.rmse_R:.4f} (target {centre}±{band}) CP={r.cp_r1:.3f}/{r.cp_r2:.3f}")
    secs = table["panel_a_case_i_seconds"]
    ok &= secs < 120
    report(1, ok, "; ".join(parts) + f"; runtime {secs:.0f}s (< 120s)")
    assert ok


def test_criterion_2_mpanic_case_i(table):
    targets = {(50, 30): (0.076, 0.03), (100, 30): (0.065, 0.025), (100, 60): (0.038, 0.015)}
    ok, parts = True, []
    for (T, p), (centre, band) in targets.items():
        r = table[(cell(T, p, "i"), "mPANIC")]
        good = abs(r.rmse_R - centre) <= band and r.cp_r1 >= 0.98 and r.cp_r2 >= 0.98
        ok &= good
        parts.append(f"T={T},p={p} RMSE(R)={r.rmse_R:.4f} (target {centre}±{band}) CP={r.cp_r1:.3f}/{r.cp_r2:.3f}")
    report(2, ok, "; ".join(parts))
    assert ok


def test_criterion_3_orderings(table):
    ok, parts = True, []
    for T, p in CASE_I:
        a = table[(cell(T, p, "i"), "mPCA")].rmse_R
        b = table[(cell(T, p, "i"), "mPANIC")].rmse_R
        ok &= a < b
        parts.append(f"(a) T={T},p={p}: {a:.4f} < {b:.4f}")
    for method in ("mPCA", "mPANIC"):
        for T, p in CASE_I:
            for field in ("rmse_R", "rmse_C"):
                vals = [getattr(table[(cell(T, p, c), method)], field) for c in ("i", "ii", "iii")]
                good = vals[0] < vals[1] < vals[2]
                ok &= good
                if not good or field == "rmse_R":
                    parts.append(f"(b) {method} T={T},p={p} {field}: " + " < ".join(f"{v:.4f}" for v in vals))
    report(3, ok, "; ".join(parts))
    assert ok


def test_criterion_4_weak_factor_selection(table):
    panic = table[(cell(50, 30, "iii"), "mPANIC")].cp_r1
    pca = table[(cell(50, 30, "iii"), "mPCA")].cp_r1
    ok = panic <= 0.15 and pca >= 0.75
    report(4, ok, f"case (iii) T=50,p=30: CP(r1) mPANIC={panic:.3f} (<= 0.15), mPCA={pca:.3f} (>= 0.75)")
    assert ok


def test_criterion_5_rate(table):
    a = table[(cell(50, 30, "i"), "mPCA")].rmse_R
    b = table[(cell(100, 30, "i"), "mPCA")].rmse_R
    ratio = a / b
    ok = 1.6 <= ratio <= 2.4
    report(5, ok, f"RMSE(R) T=50 -> T=100 at p=30: {a:.4f} / {b:.4f} = {ratio:.2f} (in [1.6, 2.4])")
    assert ok


def test_criterion_6_property_suite():
    """Run the deterministic property tests in a child pytest session."""
    import subprocess
    import sys
    from pathlib import Path

    here = Path(__file__).parent
    files = [str(here / f) for f in (
        "test_linalg.py", "test_mpca.py", "test_mpanic.py", "test_metrics.py",
        "test_panel.py", "test_cli.py", "test_montecarlo.py",
    )]
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
        capture_output=True, text=True, cwd=here.parent,
    )
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0
    report(6, ok, f"property suite (eigensolver, QR, differencing, ratio brute force, noiseless recovery, "
                  f"pseudometric, rotation oracles, invariances, CLI round-trips, parallel determinism): {tail}")
    assert ok, proc.stdout[-3000:]


def test_criterion_7_ecm_variance_growth():
    T, n = 5000, 200
    P1, P2 = cointegration_rotation(STUDY_BETA1, STUDY_BETA2)
    y = np.empty((n, T, 4))
    for k in range(n):
        V = standard_normal(make_rng(20250101, 7, k), (T, 2, 2))
        F = gen_factors_ecm(T, STUDY_ALPHA1, STUDY_BETA1, STUDY_ALPHA2, STUDY_BETA2, innovations=V)
        y[k] = vec(F)
    t = np.arange(T // 2, T)
    second = y[:, T // 2:, :]
    slope_beta = np.polyfit(t, (second @ P2)[:, :, 0].var(axis=0), 1)[0]
    slopes_perp = [np.polyfit(t, (second @ P1)[:, :, j].var(axis=0), 1)[0] for j in range(P1.shape[1])]
    ok = abs(slope_beta) < 0.02 and min(slopes_perp) > 0.5
    report(7, ok, f"T={T}, {n} paths: beta-direction variance slope {slope_beta:+.4f} (|.| < 0.02); "
                  f"beta-perp slopes " + ", ".join(f"{s:.3f}" for s in slopes_perp) + " (> 0.5)")
    assert ok
