import numpy as np
import pytest
from oracles import lp_vertex_oracle

from stochdecouple import LpProblem, LpStatus, NumericalFailure, RevisedSimplex, SolverOptions, solve_lp, verify_solution


def random_lp(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 7))
    return LpProblem(rng.standard_normal(n), rng.standard_normal((m, n)), rng.standard_normal(m))


def test_single_variable_tight_bound():
    sol = solve_lp(LpProblem([1.0], [[1.0]], [1.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.primal == pytest.approx([1.0])
    assert sol.objective == pytest.approx(1.0)
    assert sol.duals == pytest.approx([1.0])


def test_contradictory_bounds_are_infeasible():
    sol = solve_lp(LpProblem([1.0], [[-1.0], [1.0]], [-1.0, 0.0]))
    assert sol.status is LpStatus.INFEASIBLE
    assert sol.primal is None and sol.objective is None


def test_two_variable_example_matches_oracle():
    c, G, g = [3.0, 2.0], [[1.0, 1.0], [1.0, 3.0]], [4.0, 6.0]
    status, value, point = lp_vertex_oracle(c, G, g)
    sol = solve_lp(LpProblem(c, G, g))
    assert status == "Optimal" and sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(12.0, abs=1e-12)
    assert value == pytest.approx(12.0)
    np.testing.assert_allclose(sol.primal, [4.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(point, [4.0, 0.0], atol=1e-12)


def test_unbounded_ray():
    sol = solve_lp(LpProblem([1.0, 1.0], [[1.0, -1.0]], [1.0]))
    assert sol.status is LpStatus.UNBOUNDED


def test_no_rows():
    assert solve_lp(LpProblem([-1.0, 0.0], np.zeros((0, 2)), [])).objective == 0.0
    assert solve_lp(LpProblem([1.0], np.zeros((0, 1)), [])).status is LpStatus.UNBOUNDED


@pytest.mark.parametrize("method", ["revised", "highs"])
def test_oracle_equivalence_on_random_lps(method):
    rng = np.random.default_rng(12345)
    opts = SolverOptions(method=method)
    counts = {}
    for _ in range(500):
        lp = random_lp(rng)
        status, value, _ = lp_vertex_oracle(lp.objective, lp.constraint_matrix, lp.rhs)
        sol = solve_lp(lp, opts)
        assert sol.status.value == status
        counts[status] = counts.get(status, 0) + 1
        if status == "Optimal":
            assert abs(sol.objective - value) <= 1e-7
            assert abs(sol.objective - sol.duals @ lp.rhs) <= 1e-7 * (1 + abs(sol.objective))
            assert verify_solution(lp, sol).passed
    # the family exercises every status
    assert min(counts.values()) > 50


def test_deterministic_bit_identical():
    rng = np.random.default_rng(3)
    lp = LpProblem(rng.standard_normal(30), rng.standard_normal((40, 30)), rng.random(40))
    a, b = solve_lp(lp), solve_lp(lp)
    assert a.status is LpStatus.OPTIMAL
    assert np.array_equal(a.primal, b.primal) and np.array_equal(a.duals, b.duals)
    assert a.objective == b.objective and a.iterations == b.iterations


def test_degenerate_lp_terminates():
    # many redundant rows through one vertex
    G = np.vstack([np.ones((8, 3)), np.eye(3), [[1, 2, 3], [3, 2, 1]]])
    g = np.concatenate([np.ones(8), np.ones(3), [1.0, 1.0]])
    sol = solve_lp(LpProblem([1.0, 1.0, 1.0], G, g), SolverOptions(method="revised"))
    status, value, _ = lp_vertex_oracle([1.0, 1.0, 1.0], G, g)
    assert status == "Optimal" and sol.objective == pytest.approx(value, abs=1e-9)


def test_iteration_limit_raises():
    rng = np.random.default_rng(0)
    lp = LpProblem(rng.random(20), rng.random((20, 20)), np.ones(20))
    with pytest.raises(NumericalFailure):
        solve_lp(lp, SolverOptions(method="revised", max_iterations=1))


class TestVerifySolution:
    def test_exact_solution_passes(self):
        lp = LpProblem([1.0], [[1.0]], [1.0])
        report = verify_solution(lp, solve_lp(lp))
        assert report.passed
        for residual in (report.primal_infeasibility, report.dual_infeasibility, report.duality_gap, report.complementary_slackness):
            assert residual <= 1e-9

    def test_perturbed_primal_fails(self):
        lp = LpProblem([1.0], [[1.0]], [1.0])
        sol = solve_lp(lp)
        sol.primal = sol.primal + 1.0
        report = verify_solution(lp, sol)
        assert not report.passed
        assert report.primal_infeasibility == pytest.approx(1.0)

    def test_two_variable_example_passes(self):
        lp = LpProblem([3.0, 2.0], [[1.0, 1.0], [1.0, 3.0]], [4.0, 6.0])
        assert verify_solution(lp, solve_lp(lp))


class TestWarmStarts:
    """Warm-started re-solves must agree with cold solves."""

    def setup_method(self):
        rng = np.random.default_rng(7)
        self.G = rng.standard_normal((25, 12))
        self.c = rng.standard_normal(12)
        self.rng = rng

    def test_set_rhs(self):
        solver = RevisedSimplex(self.c, self.G, np.ones(25) * 2)
        solver.solve()
        for scale in np.linspace(2.0, 0.2, 10):
            g = scale * np.ones(25) + 0.1 * self.rng.standard_normal(25)
            warm = solver.set_rhs(g)
            cold = lp_vertex_like(self.c, self.G, g)
            assert warm.status is cold.status
            if cold.optimal:
                assert warm.objective == pytest.approx(cold.objective, abs=1e-9)

    def test_set_objective(self):
        solver = RevisedSimplex(self.c, self.G, np.ones(25))
        solver.solve()
        for _ in range(10):
            c = self.rng.standard_normal(12)
            warm = solver.set_objective(c)
            cold = lp_vertex_like(c, self.G, np.ones(25))
            assert warm.status is cold.status
            if cold.optimal:
                assert warm.objective == pytest.approx(cold.objective, abs=1e-9)

    def test_add_rows(self):
        solver = RevisedSimplex(self.c, self.G, np.ones(25))
        solver.solve()
        G, g = self.G, np.ones(25)
        for _ in range(10):
            row = np.abs(self.rng.standard_normal(12))
            G, g = np.vstack([G, row]), np.append(g, 0.5)
            warm = solver.add_rows(row, 0.5)
            cold = lp_vertex_like(self.c, G, g)
            assert warm.status is cold.status
            if cold.optimal:
                assert warm.objective == pytest.approx(cold.objective, abs=1e-9)
                assert verify_solution(LpProblem(self.c, G, g), warm)


def lp_vertex_like(c, G, g):
    # an independent cold solve through the HiGHS backend
    return solve_lp(LpProblem(c, G, g), SolverOptions(method="highs"))
