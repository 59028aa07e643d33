import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusedpattern.errors import ConvergenceError, InvalidInputError, InvalidParameterError
from fusedpattern.flsa import (apply_lambda1, flsa_fit, flsa_path, flsa_solve, kkt_residual,
                               objective, qp_oracle)
from fusedpattern.signal_model import paper_signal, sample_noisy


def test_two_point_path():
    path = flsa_path([0.0, 2.0])
    assert [(e.lam, e.positions) for e in path.merge_events] == [(1.0, (0,))]
    for lam in (0.0, 0.3, 0.99):
        assert np.allclose(path.fit(lam), [lam, 2 - lam])
    for lam in (1.0, 1.5, 10.0):
        assert np.allclose(path.fit(lam), [1, 1])


def test_constant_input_has_no_events():
    y = np.full(6, -1.25)
    path = flsa_path(y)
    assert path.merge_events == []
    for lam in (0, 1, 100):
        assert np.array_equal(path.fit(lam), y)


def test_single_point_and_errors():
    assert np.array_equal(flsa_path([3.0]).fit(5.0), [3.0])
    with pytest.raises(InvalidInputError):
        flsa_path([])
    with pytest.raises(InvalidParameterError):
        flsa_path([1.0, 2.0]).fit(-0.1)
    with pytest.raises(InvalidParameterError):
        apply_lambda1([1.0], -1)


def test_endpoints():
    rng = np.random.default_rng(3)
    y = rng.normal(size=25)
    path = flsa_path(y)
    assert np.array_equal(flsa_fit(path, 0.0), y)
    top = path.merge_events[-1].lam
    assert np.allclose(path.fit(top), y.mean())
    assert np.allclose(path.fit(top * 3), y.mean())
    assert len(path.groups(top * 3)) == 1


def test_apply_lambda1_examples():
    assert np.allclose(apply_lambda1([1, 1], 0.5), [0.5, 0.5])
    assert np.allclose(apply_lambda1([-0.3, 0.8], 0.5), [0, 0.3])
    v = np.array([0.2, -4.0, 1.0])
    assert np.array_equal(apply_lambda1(v, 0.0), v)


def test_qp_oracle_examples():
    assert np.allclose(qp_oracle([0, 2], 0, 0), [0, 2])
    assert np.allclose(qp_oracle([0, 2], 0, 0.5), [0.5, 1.5], atol=1e-8)
    assert np.allclose(qp_oracle([0, 2], 1, 1), [0, 0], atol=1e-8)
    assert np.allclose(flsa_solve([0, 2], 1, 1), [0, 0])


def test_qp_oracle_reports_residual_on_failure():
    with pytest.raises(ConvergenceError) as info:
        qp_oracle([0.0, 5.0, -1.0, 2.0], 0.0, 0.3, max_sweeps=0)
    assert info.value.residual > 0


def test_fit_matches_oracle_random():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 31))
        y = rng.normal(size=n) * rng.uniform(0.5, 3)
        path = flsa_path(y)
        for lam in rng.uniform(0, 3, size=10):
            worst = max(worst, np.max(np.abs(path.fit(lam) - qp_oracle(y, 0, lam))))
    assert worst <= 1e-6


def test_soft_threshold_composition_random():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(2, 31))
        y = rng.normal(size=n) * 2
        lam1, lam2 = rng.uniform(0, 1.5, size=2)
        assert np.allclose(flsa_solve(y, lam1, lam2), qp_oracle(y, lam1, lam2), atol=1e-6)


def test_fit_beats_perturbations():
    rng = np.random.default_rng(13)
    y = rng.normal(size=15)
    mu = flsa_solve(y, 0.2, 0.7)
    f0 = objective(y, mu, 0.2, 0.7)
    for _ in range(200):
        assert objective(y, mu + rng.normal(size=15) * 1e-3, 0.2, 0.7) >= f0 - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40), st.floats(0, 5), st.floats(0, 2))
def test_kkt_certificate_and_conservation(ys, lam2, lam1):
    y = np.array(ys)
    mu0 = flsa_path(y).fit(lam2)
    assert kkt_residual(y, mu0, 0.0, lam2) <= 1e-7 * (1 + np.abs(y).max())
    assert np.isclose(mu0.sum(), y.sum(), atol=1e-8 * (1 + np.abs(y).sum()))
    mu = apply_lambda1(mu0, lam1)
    assert kkt_residual(y, mu, lam1, lam2) <= 1e-7 * (1 + np.abs(y).max())


def test_kkt_residual_detects_non_solution():
    y = np.array([0.0, 2.0, 1.0])
    assert kkt_residual(y, y, 0.0, 0.5) > 0.1
    assert kkt_residual(y, np.full(3, y.mean()), 0.0, 0.1) > 0.01


def test_partitions_nested_along_path():
    rng = np.random.default_rng(14)
    for _ in range(30):
        y = rng.normal(size=int(rng.integers(2, 60)))
        path = flsa_path(y)
        grid = np.concatenate(([0.0], path.knots, path.knots + 1e-9))
        grid.sort()
        prev = path.partition_labels(grid[0])
        for lam in grid[1:]:
            cur = path.partition_labels(lam)
            # every fine group maps into exactly one coarse group
            for g in np.unique(prev):
                assert np.unique(cur[prev == g]).size == 1
            prev = cur
        events = [e.lam for e in path.merge_events]
        assert events == sorted(events)


def test_symmetric_ties_merge_in_one_event():
    path = flsa_path([0.0, 1.0, 0.0, 1.0, 0.0])
    lams = [e.lam for e in path.merge_events]
    assert len(lams) == len(set(lams))
    assert sum(len(e.positions) for e in path.merge_events) == 4
    y = np.array([1.0, 0.0, 0.0, 1.0])
    ev = flsa_path(y).merge_events
    assert len(ev) == 1 and ev[0].positions == (0, 2)


def test_segments_are_linear_pieces():
    rng = np.random.default_rng(15)
    y = rng.normal(size=20)
    path = flsa_path(y)
    for lo, hi, groups, slope in path.segments():
        top = lo + 1.0 if np.isinf(hi) else hi
        for t in (0.25, 0.5, 0.9):
            lam = lo + t * (top - lo)
            assert np.allclose(path.groups(lam).values, groups.values + (lam - lo) * slope)


def test_first_split_often_off_the_jumps():
    """The coarsest split of the path frequently lands inside a block."""
    sig = paper_signal()
    true_bounds = set((sig.jump_indices - 2).tolist())
    off = 0
    for seed in range(20):
        path = flsa_path(sample_noisy(sig, 0.25, seed).values)
        first = path.merge_events[-1].positions
        off += not set(first) <= true_bounds
    assert off >= 10
