"""End-to-end acceptance checks; each test records one PASS/FAIL line."""
import math
import time

import numpy as np

from fusedpattern.design import centered_design_dense
from fusedpattern.experiments import (ExperimentConfig, ic_necessity_experiment,
                                      recovery_probability, theorem6_experiment)
from fusedpattern.flsa import apply_lambda1, flsa_path, kkt_residual, qp_oracle
from fusedpattern.ic import (JumpSet, ic_magnitudes, max_index_matrix, proof_case_value,
                             structural_ic, tridiag_inverse)
from fusedpattern.puffer import precondition_scores_svd, svd_centered_design
from fusedpattern.signal_model import paper_signal

SIGMA_GRID = (0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4)


def test_c1_headline_probability(record_criterion):
    start = time.perf_counter()
    res = recovery_probability(ExperimentConfig(paper_signal(), (0.25,), 1000, seed=0))
    elapsed = time.perf_counter() - start
    p = res.probability(0.25)
    ok = abs(p - 0.926) <= 0.03 and elapsed < 120
    assert record_criterion("C1 preconditioned recovery at sigma=0.25", ok,
                            f"P={p:.3f} (target 0.926 +/- 0.03), se={res.stderr(0.25):.4f}, "
                            f"{elapsed:.1f}s")


def test_c2_flsa_failure(record_criterion):
    res = recovery_probability(ExperimentConfig(paper_signal(), (0.25,), 1000, seed=0,
                                                method="flsa"))
    p = res.probability(0.25)
    assert record_criterion("C2 FLSA recovery at sigma=0.25", p <= 0.01, f"P={p:.3f} (<= 0.01)")


def test_c3_sigma_sweep_shape(record_criterion):
    start = time.perf_counter()
    res = recovery_probability(ExperimentConfig(paper_signal(), SIGMA_GRID, 300, seed=1))
    elapsed = time.perf_counter() - start
    table = res.table()
    mono = all(p2 <= p1 + 2 * math.hypot(e1, e2)
               for i, (_, p1, e1) in enumerate(table) for (_, p2, e2) in table[i + 1:])
    ok = table[0][1] >= 0.99 and mono and elapsed < 300
    curve = " ".join(f"{p:.3f}" for _, p, _ in table)
    assert record_criterion("C3 sigma sweep 0.1..0.4", ok,
                            f"P=[{curve}], monotone(2SE)={mono}, {elapsed:.1f}s")


def test_c4_min_singular_value(record_criterion):
    worst = min(svd_centered_design(n).D.min() for n in range(2, 201))
    assert record_criterion("C4 min singular value, n=2..200", worst >= 0.5 - 1e-9,
                            f"min={worst:.9f}")


def test_c5_orthonormal_columns(record_criterion):
    errs = []
    for n in (2, 10, 50, 300):
        Z = svd_centered_design(n).F @ centered_design_dense(n)
        errs.append(np.max(np.abs(Z.T @ Z - np.eye(n - 1))))
    worst = max(errs)
    assert record_criterion("C5 Z'Z = I", worst <= 1e-8, f"max err={worst:.2e}")


def test_c6_score_identity(record_criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 301))
        y = rng.normal(size=n) * rng.uniform(0.1, 5)
        worst = max(worst, np.max(np.abs(precondition_scores_svd(y) - np.diff(y))))
    assert record_criterion("C6 SVD scores = differences", worst <= 1e-10,
                            f"max err={worst:.2e}")


def test_c7_solver_cross_validation(record_criterion):
    rng = np.random.default_rng(7)
    fit_err = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 31))
        y = rng.normal(size=n) * 2
        lam2 = rng.uniform(0, 3)
        fit_err = max(fit_err, np.max(np.abs(flsa_path(y).fit(lam2) - qp_oracle(y, 0, lam2))))
    comp_err = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 31))
        y = rng.normal(size=n) * 2
        lam1, lam2 = rng.uniform(0, 2, size=2)
        direct = qp_oracle(y, lam1, lam2)
        comp_err = max(comp_err, np.max(np.abs(apply_lambda1(flsa_path(y).fit(lam2), lam1)
                                               - direct)))
    ok = fit_err <= 1e-6 and comp_err <= 1e-6
    assert record_criterion("C7 path vs oracle", ok,
                            f"fit err={fit_err:.2e}, composition err={comp_err:.2e}")


def _case_errors(js):
    rep = ic_magnitudes(js)
    worst = 0.0
    for j, sv, l1 in zip(rep.columns, rep.signed, rep.l1):
        cv = proof_case_value(js, int(j))
        worst = max(worst, abs(cv.l1 - l1), abs(cv.signed - sv))
    return worst


def test_c8_ic_structural_and_closed_forms(record_criterion):
    rng = np.random.default_rng(8)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(3, 51))
        s = int(rng.integers(1, n))
        cols = np.sort(rng.choice(np.arange(1, n), size=s, replace=False))
        js = JumpSet.from_columns(n, cols, rng.choice([-1, 1], size=s))
        rep = ic_magnitudes(js)
        v = structural_ic(js)
        mismatches += v.ic_holds != (rep.max_signed < 1 - 1e-9)
        mismatches += v.strong_holds != (rep.max_l1 < 1 - 1e-9)
    # every jump subset for n <= 10, both sign conventions; every column of
    # 40 random subsets for each larger n up to 40
    worst = 0.0
    for n in range(3, 11):
        for mask in range(1, 2 ** (n - 1) - 1):
            cols = [c for c in range(1, n) if mask >> (c - 1) & 1]
            for signs in ([1] * len(cols), [(-1) ** k for k in range(len(cols))]):
                worst = max(worst, _case_errors(JumpSet.from_columns(n, cols, signs)))
    for n in range(11, 41):
        for _ in range(40):
            s = int(rng.integers(1, n - 1))
            cols = np.sort(rng.choice(np.arange(1, n), size=s, replace=False))
            worst = max(worst, _case_errors(
                JumpSet.from_columns(n, cols, rng.choice([-1, 1], size=s))))
    ok = mismatches == 0 and worst <= 1e-10
    assert record_criterion("C8 IC structural = numeric, closed forms", ok,
                            f"verdict mismatches={mismatches}, closed-form err={worst:.2e}")


def test_c9_tridiagonal_inverse(record_criterion):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(50):
        k = int(rng.integers(1, 51))
        a = np.cumsum(rng.uniform(0.1, 3, size=k))[::-1] + rng.uniform(0.1, 2)
        err = np.max(np.abs(max_index_matrix(a) @ tridiag_inverse(a).dense() - np.eye(k)))
        worst = max(worst, err)
    assert record_criterion("C9 closed-form tridiagonal inverse", worst <= 1e-9,
                            f"max err={worst:.2e}")


def test_c10_theorem6_validity(record_criterion):
    cells = theorem6_experiment(paper_signal(), [0.6, 0.8, 0.95], [0.05, 0.08, 0.1, 0.12],
                                reps=500, seed=10)
    tested = [c for c in cells if c.condition_ok and c.bound > 0]
    bad = [c for c in tested if c.frequency < c.bound]
    ok = bool(tested) and not bad
    assert record_criterion("C10 fixed-lambda recovery >= bound", ok,
                            f"{len(tested)} cells with positive bound, {len(bad)} violations")


def test_c11_necessity(record_criterion):
    res = ic_necessity_experiment(JumpSet(20, (5, 10), (1, 1)), 0.1, 1000, seed=11)
    limit = 0.5 + 3 * math.sqrt(0.25 / 1000)
    worst = float(res.per_lambda.max())
    ok = res.lambdas.size == 20 and worst <= limit
    assert record_criterion("C11 IC violated -> recovery <= 1/2", ok,
                            f"max per-lambda freq={worst:.3f} (<= {limit:.3f}), "
                            f"max signed={res.max_signed:.3f}")


def test_c12_fusion_monotonicity(record_criterion):
    rng = np.random.default_rng(12)
    nested = True
    certified = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 101))
        y = rng.normal(size=n) * rng.uniform(0.2, 3)
        path = flsa_path(y)
        grid = np.concatenate(([0.0], path.knots, path.knots * (1 + 1e-9)))
        grid.sort()
        prev = path.partition_labels(grid[0])
        for lam in grid[1:]:
            cur = path.partition_labels(lam)
            nested &= all(np.unique(cur[prev == g]).size == 1 for g in np.unique(prev))
            prev = cur
        for lam in rng.uniform(0, 3, size=3):
            scale = 1 + np.abs(y).max()
            certified = max(certified, kkt_residual(y, path.fit(lam), 0.0, lam) / scale)
    ok = nested and certified <= 1e-8
    assert record_criterion("C12 partitions nested along the path", ok,
                            f"nested={nested}, max scaled KKT residual={certified:.1e}")


if __name__ == "__main__":
    import sys

    import pytest
    sys.exit(pytest.main([__file__, "-q"]))
