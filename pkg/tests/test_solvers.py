import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matchbench.errors import DomainError
from matchbench.harness import Budget
from matchbench.solvers import (
    QualityBounds, QuboInstance, SharedBoundsCalibrator, brute_force_optimum, generate_qubo,
    objective, quality_from_objective, solve_greedy, solve_sa,
)


def enumerate_min(instance):
    """Independent oracle: plain loop over itertools.product, double-loop objective."""
    Q = instance.matrix
    n = instance.n
    best, arg = math.inf, None
    for bits in itertools.product((0, 1), repeat=n):
        f = sum(Q[i, j] * bits[i] * bits[j] for i in range(n) for j in range(n))
        if f < best - 1e-12:
            best, arg = f, bits
    return best, arg


def test_generate_deterministic():
    a = generate_qubo(24, 0.25, 0)
    b = generate_qubo(24, 0.25, 0)
    assert a == b
    assert not np.array_equal(a.matrix, generate_qubo(24, 0.25, 1).matrix)


@given(st.integers(1, 30), st.floats(0.01, 1.0), st.integers(0, 2 ** 32))
@settings(max_examples=100)
def test_generate_symmetric_zero_diagonal(n, density, seed):
    Q = generate_qubo(n, density, seed).matrix
    assert np.array_equal(Q, Q.T)
    assert np.all(np.diag(Q) == 0)


def test_generate_full_density_keeps_all():
    Q = generate_qubo(4, 1.0, 123).matrix
    assert np.count_nonzero(Q) == 12


def test_generate_rejects_bad_args():
    for bad in (0.0, -0.1, 1.01):
        with pytest.raises(DomainError):
            generate_qubo(4, bad, 0)
    with pytest.raises(DomainError):
        generate_qubo(0, 0.5, 0)


def test_objective_examples():
    inst = QuboInstance.from_matrix([[0, 1], [1, 0]])
    assert objective(inst, [1, 1]) == 2
    assert objective(generate_qubo(8, 0.5, 3), np.zeros(8)) == 0
    with pytest.raises(DomainError):
        objective(inst, [1, 0, 1])
    with pytest.raises(DomainError):
        objective(inst, [2, 0])


@given(st.integers(1, 8), st.integers(0, 10 ** 6), st.data())
@settings(max_examples=100)
def test_objective_matches_double_loop(n, seed, data):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(n, n))  # asymmetric on purpose
    x = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    oracle = sum(Q[i, j] * x[i] * x[j] for i in range(n) for j in range(n))
    assert math.isclose(objective(QuboInstance.from_matrix(Q), x), oracle, abs_tol=1e-12)


def test_quality_from_objective():
    b = QualityBounds(-10.0, 0.0)
    assert quality_from_objective(-10, b) == 1.0
    assert quality_from_objective(0, b) == 0.0
    assert quality_from_objective(5, b) == 0.0
    assert quality_from_objective(-20, b) == 1.0
    assert quality_from_objective(-2.5, b) == 0.25
    assert quality_from_objective(3, QualityBounds(1.0, 1.0)) == 1.0
    with pytest.raises(DomainError):
        QualityBounds(1.0, 0.0)


def test_brute_force_small_cases():
    f, x = brute_force_optimum(QuboInstance.from_matrix(np.zeros((5, 5))))
    assert f == 0 and x.tolist() == [0] * 5
    f, x = brute_force_optimum(QuboInstance.from_matrix([[0, -1], [-1, 0]]))
    assert f == -2 and x.tolist() == [1, 1]


@pytest.mark.parametrize("seed", range(5))
def test_brute_force_matches_enumeration(seed):
    inst = generate_qubo(8, 0.6, seed)
    f, x = brute_force_optimum(inst)
    f_or, x_or = enumerate_min(inst)
    assert math.isclose(f, f_or, abs_tol=1e-9)
    assert tuple(x) == x_or


def test_brute_force_lexicographic_ties():
    # x0 and x1 are interchangeable, so (0,1,...) and (1,0,...) tie
    Q = np.zeros((3, 3))
    Q[0, 2] = Q[2, 0] = -1
    Q[1, 2] = Q[2, 1] = -1
    Q[0, 1] = Q[1, 0] = 5
    f, x = brute_force_optimum(QuboInstance.from_matrix(Q))
    assert f == -2 and x.tolist() == [0, 1, 1]


def test_brute_force_cap():
    with pytest.raises(DomainError):
        brute_force_optimum(generate_qubo(25, 0.1, 0))


def test_brute_force_asymmetric_matrix():
    rng = np.random.default_rng(5)
    inst = QuboInstance.from_matrix(rng.normal(size=(7, 7)))
    f, x = brute_force_optimum(inst)
    f_or, x_or = enumerate_min(inst)
    assert math.isclose(f, f_or, abs_tol=1e-9) and tuple(x) == x_or


@pytest.mark.parametrize("solve", [solve_sa, solve_greedy])
def test_degenerate_instance(solve):
    inst = QuboInstance.from_matrix([[0.0]])
    q, meta = solve(inst, Budget(0.005), 0)
    assert q == 1.0
    assert meta["f_best"] == 0


@pytest.mark.parametrize("solve", [solve_sa, solve_greedy])
def test_iteration_mode_is_exact(solve):
    inst = generate_qubo(16, 0.3, 2)
    a = solve(inst, Budget(0.05), 11, max_iters=500)
    b = solve(inst, Budget(0.05), 11, max_iters=500)
    assert a[0] == b[0]
    assert a[1]["f_best"] == b[1]["f_best"]
    assert a[1]["flips_evaluated"] == b[1]["flips_evaluated"]
    assert a[1]["best_x"] == b[1]["best_x"]


@pytest.mark.parametrize("solve", [solve_sa, solve_greedy])
def test_reported_best_is_exact(solve):
    inst = generate_qubo(12, 0.5, 4)
    _, meta = solve(inst, Budget(0.05), 3, max_iters=2000)
    x = np.array([int(c) for c in meta["best_x"]])
    assert meta["f_best"] == objective(inst, x)


@pytest.mark.parametrize("solve", [solve_sa, solve_greedy])
def test_solver_returns_within_budget(solve):
    inst = generate_qubo(24, 0.25, 0)
    t0 = time.perf_counter()
    q, meta = solve(inst, Budget(0.02), 1)
    assert time.perf_counter() - t0 < 0.02 * 1.5
    assert 0.0 <= q <= 1.0


@pytest.mark.parametrize("solve", [solve_sa, solve_greedy])
def test_solvers_find_optimum_n10_iteration_mode(solve):
    hits = 0
    for t in range(20):
        inst = generate_qubo(10, 0.5, 100 + t)
        f_min, _ = brute_force_optimum(inst)
        _, meta = solve(inst, Budget(1.0), t, max_iters=20000)
        hits += math.isclose(meta["f_best"], f_min, abs_tol=1e-9)
    assert hits >= 19


def test_greedy_restarts_from_local_minimum():
    # every coupling positive: all-zeros (the start) is a local minimum
    Q = np.ones((4, 4)) - np.eye(4)
    _, meta = solve_greedy(QuboInstance.from_matrix(Q), Budget(1.0), 0, max_iters=1)
    assert meta["restarts"] >= 1


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_greedy_descents_strictly_decrease(seed):
    inst = generate_qubo(12, 0.5, seed)
    _, meta = solve_greedy(inst, Budget(1.0), seed, max_iters=300, record_trajectory=True)
    traj = meta["trajectory"]
    for (r0, f0), (r1, f1) in zip(traj, traj[1:]):
        if r0 == r1:
            assert f1 < f0


def test_sa_accepts_uphill_moves_rarely():
    inst = generate_qubo(16, 0.5, 9)
    _, meta = solve_sa(inst, Budget(1.0), 2, max_iters=20000)
    # after descent, acceptance is dominated by the 1% uphill rate
    assert 0 < meta["flips_accepted"] < meta["flips_evaluated"] * 0.5


def test_instance_round_trip():
    inst = generate_qubo(6, 0.5, 8)
    assert QuboInstance.from_dict(inst.to_dict()) == inst


def test_shared_calibrator():
    inst = generate_qubo(10, 0.5, 1)
    f_min, _ = brute_force_optimum(inst)
    cal = SharedBoundsCalibrator()
    metas = [{"f_best": f_min}, {"f_best": f_min / 2}, None]
    qs = cal(inst, 0, metas)
    assert qs[0] == 1.0
    assert 0 < qs[1] < 1
    assert qs[2] is None
    b = cal.bounds(inst, 0, metas)
    assert b.f_reference_low == f_min
    X = np.random.default_rng(0).integers(0, 2, size=(256, 10))
    assert math.isclose(b.f_reference_high, np.mean([objective(inst, x) for x in X]))
