import math
import time

import highspy
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nucshare.lp import LpBuilder, from_dense
from nucshare.mps import export_mps
from nucshare.simplex import Status, Tolerances, solve
from oracles import random_bounded_lp, vertex_enumeration

INF = math.inf


def dual_objective(lp, sol):
    """Lagrangian value of the returned multipliers at the optimal bounds."""
    d = sol.reduced_costs.copy()
    d[np.abs(d) <= 1e-9 * (1 + np.abs(lp.cost).max())] = 0.0
    bound = np.where(d > 0, lp.lb, np.where(d < 0, lp.ub, 0.0))
    with np.errstate(invalid="ignore"):
        terms = np.where(d != 0, d * bound, 0.0)
    return float(lp.rhs @ sol.duals + terms.sum()) + lp.offset


def check_optimality(lp, sol, tol=1e-6):
    x, pi, d = sol.x, sol.duals, sol.reduced_costs
    scale = 1 + np.abs(lp.cost).max()
    assert lp.residuals(x).max(initial=0) <= 1e-7 * (1 + np.abs(lp.rhs).max(initial=0))
    assert lp.bound_violation(x) <= 1e-9
    # dual signs: <= rows have nonpositive multipliers when minimizing
    assert np.all(pi[lp.sense == "L"] <= tol * scale)
    assert np.all(pi[lp.sense == "G"] >= -tol * scale)
    slack = np.abs(lp.A @ x - lp.rhs)
    assert np.all(np.abs(pi) * slack <= tol * scale * (1 + slack))
    at_lb = np.isclose(x, lp.lb, atol=1e-7)
    at_ub = np.isclose(x, lp.ub, atol=1e-7)
    assert np.all(d[~at_lb] <= tol * scale)
    assert np.all(d[~at_ub] >= -tol * scale)
    gap = abs(dual_objective(lp, sol) - sol.objective)
    assert gap <= 1e-6 * (1 + abs(sol.objective))


def test_trivial_max():
    sol = solve(from_dense([-1], [[1]], ["L"], [1]))
    assert sol.optimal and sol.x.tolist() == [1.0] and sol.objective == -1.0


def test_two_dimensional_example():
    lp = from_dense([2, 3], [[1, 1]], ["G"], [4], ub=[3, 3])
    sol = solve(lp)
    assert sol.optimal
    assert sol.x == pytest.approx([3, 1], abs=1e-12)
    assert sol.objective == pytest.approx(9, abs=1e-12)
    assert vertex_enumeration([2, 3], [[1, 1]], ["G"], [4], [3, 3])[0] == pytest.approx(9)
    check_optimality(lp, sol)


def test_infeasible_bounds_and_rows():
    assert solve(from_dense([0], [[1], [1]], ["G", "L"], [1, 0])).status is Status.INFEASIBLE
    assert solve(from_dense([1, 1], [[1, 1], [1, 1]], ["G", "L"], [5, 4])).status is Status.INFEASIBLE
    assert solve(from_dense([1, 1], [[1, 1]], ["E"], [3], ub=[1, 1])).status is Status.INFEASIBLE
    assert solve(from_dense([1, -1], [[1, -1], [-1, 1]], ["G", "G"], [1, 1], lb=[-INF, -INF],
                            ub=[INF, INF])).status is Status.INFEASIBLE


def test_infeasible_fixed_variable_row():
    b = LpBuilder()
    x = b.var("x", 2.0, 2.0)
    b.row("r", [(x, 1.0)], "L", 1.0)
    sol = solve(b.finish())
    assert sol.status is Status.INFEASIBLE and "r" in sol.message


def test_unbounded():
    assert solve(from_dense([-1, 0], [[1, -1]], ["L"], [1])).status is Status.UNBOUNDED
    assert solve(from_dense([1], [[1]], ["L"], [5], lb=[-INF])).status is Status.UNBOUNDED
    lp = from_dense([-1, -1], [[1, -2], [-2, 1]], ["L", "L"], [2, 2])
    assert solve(lp).status is Status.UNBOUNDED


def test_free_and_fixed_variables():
    b = LpBuilder()
    x = b.var("x", -INF, INF, 1.0)
    y = b.var("y", 2.0, 2.0, 5.0)
    z = b.var("z", -3.0, 4.0, -1.0)
    b.row("a", [(x, 1.0), (y, 1.0)], "G", -1.0)
    b.row("b", [(x, 1.0), (z, 1.0)], "G", 0.0)
    b.offset = 2.5
    lp = b.finish()
    sol = solve(lp)
    assert sol.optimal
    assert sol.as_dict() == pytest.approx({"x": -3.0, "y": 2.0, "z": 4.0})
    assert sol.objective == pytest.approx(-3 + 10 - 4 + 2.5)
    assert sol.value("z") == 4.0
    check_optimality(lp, sol)


def test_equality_system_duals():
    lp = from_dense([1, 2, 3], [[1, 1, 1], [1, -1, 0]], ["E", "E"], [6, 0])
    sol = solve(lp)
    assert sol.optimal and sol.objective == pytest.approx(9.0)
    # d objective / d rhs
    eps = 1e-4
    bumped = from_dense([1, 2, 3], [[1, 1, 1], [1, -1, 0]], ["E", "E"], [6 + eps, 0])
    assert (solve(bumped).objective - sol.objective) / eps == pytest.approx(sol.duals[0], rel=1e-6)
    check_optimality(lp, sol)


def test_two_hundred_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(20240611)
    start = time.perf_counter()
    worst = 0.0
    for k in range(200):
        c, A, sense, b, ub = random_bounded_lp(rng)
        expected, _ = vertex_enumeration(c, A, sense, b, ub)
        lp = from_dense(c, A, sense, b, ub=ub)
        sol = solve(lp)
        assert sol.optimal, f"lp {k}: {sol.status}"
        assert abs(sol.objective - expected) <= 1e-6 * max(1.0, abs(expected)), k
        check_optimality(lp, sol)
        worst = max(worst, abs(sol.objective - expected))
    assert time.perf_counter() - start < 30


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_feasible_never_infeasible(seed):
    rng = np.random.default_rng(seed)
    c, A, sense, b, ub = random_bounded_lp(rng, max_vars=40, max_basis=10**12)
    sol = solve(from_dense(c, A, sense, b, ub=ub))
    assert sol.optimal


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    c, A, sense, b, ub = random_bounded_lp(rng, max_vars=30, max_basis=10**12)
    lp = from_dense(c, A, sense, b, ub=ub)
    base = solve(lp).objective
    p = lp.permuted(rng.permutation(lp.n_vars), rng.permutation(lp.n_rows))
    assert solve(p).objective == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_permutation_invariance_on_toy(toy_model):
    rng = np.random.default_rng(5)
    lp = toy_model.lp
    p = lp.permuted(rng.permutation(lp.n_vars), rng.permutation(lp.n_rows))
    assert solve(p).objective == pytest.approx(toy_model.solution.objective, rel=1e-9)


def test_weak_duality_at_every_snapshot(toy_model):
    lp = toy_model.lp
    sol = solve(lp, trace_every=1)
    opt = sol.objective
    assert sol.optimal and len(sol.trace) >= sol.iterations // 2
    tol = 1e-6 * (1 + abs(opt))
    finite = 0
    for snap in sol.trace:
        assert snap.dual_bound <= opt + tol, snap
        if snap.primal_feasible:
            assert snap.primal_objective >= opt - tol, snap
        finite += math.isfinite(snap.dual_bound)
    assert finite > 0


def test_weak_duality_random():
    rng = np.random.default_rng(77)
    for _ in range(20):
        c, A, sense, b, ub = random_bounded_lp(rng, max_vars=30, max_basis=10**12)
        sol = solve(from_dense(c, A, sense, b, ub=ub), trace_every=1)
        for snap in sol.trace:
            assert snap.dual_bound <= sol.objective + 1e-7 * (1 + abs(sol.objective))


def test_toy_optimality_conditions(toy_model):
    check_optimality(toy_model.lp, toy_model.solution, tol=1e-6)


def test_iteration_limit_reported(toy_model):
    sol = solve(toy_model.lp, Tolerances(max_iterations=50))
    assert sol.status is Status.ITERATION_LIMIT and sol.iterations == 50
    assert not sol.optimal


def test_lowest_index_rule_still_optimal(toy_model):
    sol = solve(toy_model.lp, Tolerances(bland_after=20))
    assert sol.optimal
    assert sol.objective == pytest.approx(toy_model.solution.objective, rel=1e-9)


def test_frequent_refactorization_agrees(toy_model):
    sol = solve(toy_model.lp, Tolerances(refactor_every=5))
    assert sol.objective == pytest.approx(toy_model.solution.objective, rel=1e-9)


def test_iteration_log():
    lines = []
    solve(from_dense([-1, -1], [[1, 2], [3, 1]], ["L", "L"], [4, 6]), log=lines.append)
    assert lines and lines[-1].startswith("optimal after")


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    lp = from_dense(c, A, ["L", "L", "L"], [0, 0, 1])
    sol = solve(lp, Tolerances(bland_after=1))
    assert sol.optimal and sol.objective == pytest.approx(-0.05, abs=1e-12)
    check_optimality(lp, sol)


def test_reference_mps_matches_external_solver(reference_model, tmp_path):
    path = tmp_path / "reference.mps"
    path.write_text(export_mps(reference_model.lp))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    theirs = h.getInfo().objective_function_value
    assert reference_model.solution.optimal
    assert reference_model.solution.objective == pytest.approx(theirs, rel=1e-5)
