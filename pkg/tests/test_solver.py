"""Tests for the gradient-descent / BFGS / L-BFGS solvers."""

import numpy as np
import pytest

from planattack.env import EnvironmentMap, Obstacle
from planattack.planner import CostModel, CostWeights, straight_line_init
from planattack.solver import (
    BfgsState,
    LbfgsState,
    Method,
    SolverConfig,
    bfgs_inverse_hessian,
    minimize,
    minimize_objective,
)


def quadratic(A, b):
    """f(x) = 0.5 x'Ax - b'x with analytic gradient."""

    def objective(x):
        return 0.5 * float(x @ A @ x) - float(b @ x), A @ x - b

    return objective


def rosenbrock(x):
    a, b = 1.0, 100.0
    value = (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2
    grad = np.array(
        [
            -2 * (a - x[0]) - 4 * b * x[0] * (x[1] - x[0] ** 2),
            2 * b * (x[1] - x[0] ** 2),
        ]
    )
    return value, grad


SPD = np.array([[3.0, 1.0], [1.0, 2.0]])
RHS = np.array([1.0, -2.0])


class TestOnQuadratics:
    @pytest.mark.parametrize("method", list(Method))
    def test_reaches_minimizer(self, method):
        # 1e-8 is about the gradient floor reachable in double precision on
        # an O(1) objective; below that the stall guard cuts the run short.
        config = SolverConfig(method=method, max_iters=2000, grad_tol=1e-8)
        x, report = minimize_objective(quadratic(SPD, RHS), np.array([5.0, -7.0]), config)
        assert report.converged
        np.testing.assert_allclose(x, np.linalg.solve(SPD, RHS), atol=1e-7)

    def test_bfgs_inverse_hessian_approaches_a_inverse(self):
        # The approximation is only refined along explored search directions,
        # so expect percent-level agreement, not machine precision.
        config = SolverConfig(method=Method.BFGS, max_iters=500, grad_tol=1e-8)
        _, report = minimize_objective(
            quadratic(SPD, RHS), np.array([5.0, -7.0]), config
        )
        assert report.converged
        np.testing.assert_allclose(
            bfgs_inverse_hessian(report), np.linalg.inv(SPD), atol=5e-3
        )

    def test_monotone_decrease(self):
        # Armijo accepts rounding-equal values once decreases shrink below
        # one ulp, so the tail is non-increasing rather than strictly so.
        config = SolverConfig(method=Method.GD, max_iters=300, grad_tol=1e-9)
        objective = quadratic(SPD, RHS)
        _, report = minimize_objective(objective, np.array([10.0, 10.0]), config)
        values = [objective(it)[0] for it in report.iterates]
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[-1] < values[0]

    def test_gd_slows_with_conditioning(self):
        counts = []
        for kappa in (2.0, 20.0, 200.0):
            A = np.diag([1.0, kappa])
            config = SolverConfig(method=Method.GD, max_iters=100000, grad_tol=1e-8)
            _, report = minimize_objective(
                quadratic(A, np.zeros(2)), np.array([1.0, 1.0]), config
            )
            assert report.converged
            counts.append(report.iterations)
        assert counts[0] < counts[1] < counts[2]


class TestRosenbrock:
    @pytest.mark.parametrize("method", [Method.BFGS, Method.LBFGS])
    def test_quasi_newton_solves_it(self, method):
        # The backtracking-only line search crawls through the banana valley
        # (L-BFGS takes ~700 iterations) but lands on the minimum exactly.
        config = SolverConfig(method=method, max_iters=2000, grad_tol=1e-8)
        x, report = minimize_objective(rosenbrock, np.array([-1.2, 1.0]), config)
        assert report.converged
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-6)


class TestReportContents:
    def test_iterates_start_at_x0_and_count_matches(self):
        config = SolverConfig(method=Method.BFGS, max_iters=50, grad_tol=1e-10)
        x0 = np.array([3.0, 3.0])
        _, report = minimize_objective(quadratic(SPD, RHS), x0, config)
        np.testing.assert_array_equal(report.iterates[0], x0)
        assert len(report.iterates) == report.iterations + 1

    def test_zero_iteration_budget(self):
        config = SolverConfig(max_iters=0, grad_tol=1e-12)
        x0 = np.array([1.0, 1.0])
        x, report = minimize_objective(quadratic(SPD, RHS), x0, config)
        assert not report.converged
        assert report.iterations == 0
        np.testing.assert_array_equal(x, x0)

    def test_already_converged_at_start(self):
        config = SolverConfig(grad_tol=1e-6)
        x_star = np.linalg.solve(SPD, RHS)
        _, report = minimize_objective(quadratic(SPD, RHS), x_star, config)
        assert report.converged
        assert report.iterations == 0

    def test_deterministic(self):
        config = SolverConfig(method=Method.LBFGS, max_iters=200, grad_tol=1e-10)
        x1, r1 = minimize_objective(rosenbrock, np.array([-1.2, 1.0]), config)
        x2, r2 = minimize_objective(rosenbrock, np.array([-1.2, 1.0]), config)
        np.testing.assert_array_equal(x1, x2)
        assert r1.iterations == r2.iterations
        assert r1.final_value == r2.final_value

    def test_inverse_hessian_unavailable_for_gd(self):
        config = SolverConfig(method=Method.GD, max_iters=10, grad_tol=1e-3)
        _, report = minimize_objective(quadratic(SPD, RHS), np.array([1.0, 0.0]), config)
        with pytest.raises(ValueError):
            bfgs_inverse_hessian(report)

    def test_inv_hessian_trace_recorded_on_request(self):
        config = SolverConfig(
            method=Method.BFGS, max_iters=20, grad_tol=1e-10, record_inv_hessians=True
        )
        _, report = minimize_objective(quadratic(SPD, RHS), np.array([4.0, 4.0]), config)
        assert report.inv_hessian_trace is not None
        assert len(report.inv_hessian_trace) >= 2
        np.testing.assert_array_equal(report.inv_hessian_trace[0], np.eye(2))


class TestNonfinite:
    def test_nonfinite_at_start(self):
        def objective(x):
            return np.nan, np.zeros_like(x)

        x0 = np.array([1.0, 1.0])
        x, report = minimize_objective(objective, x0, SolverConfig())
        assert report.error == "nonfinite-objective"
        assert not report.converged
        np.testing.assert_array_equal(x, x0)

    def test_nonfinite_mid_run_keeps_best(self):
        def objective(x):
            if x[0] < 0.5:
                return np.inf, np.full_like(x, np.inf)
            return float((x[0] - 0.2) ** 2), np.array([2 * (x[0] - 0.2)])

        x, report = minimize_objective(objective, np.array([2.0]), SolverConfig(max_iters=100))
        assert report.error == "nonfinite-objective"
        assert np.isfinite(objective(x)[0])


class TestStallAndProgress:
    def test_line_search_exhaustion_returns_best(self):
        # |x| has no descent step from the kink under Armijo with c > 0 once
        # the iterate lands exactly at a point where both directions increase
        def objective(x):
            return float(np.abs(x[0])), np.array([np.sign(x[0]) if x[0] != 0 else 0.0])

        config = SolverConfig(method=Method.GD, max_iters=1000, grad_tol=1e-12)
        x, report = minimize_objective(objective, np.array([0.7]), config)
        assert not report.converged
        assert report.error is None
        assert report.iterations < 1000
        # it still made it near the kink before giving up
        assert abs(x[0]) < 0.7

    def test_progress_rule_cuts_off_flat_tail(self):
        # a valley so shallow that per-step decrease is far below the
        # relative-progress threshold
        def objective(x):
            return 1.0 + 1e-12 * float(x[0] ** 2), np.array([2e-12 * x[0]])

        config = SolverConfig(
            method=Method.GD,
            max_iters=10000,
            grad_tol=1e-30,
            progress_tol=1e-6,
            progress_patience=3,
        )
        _, report = minimize_objective(objective, np.array([1.0]), config)
        assert not report.converged
        assert report.iterations == 3

    def test_progress_rule_off_by_default(self):
        config = SolverConfig(method=Method.GD, max_iters=10000, grad_tol=1e-8)
        assert config.progress_tol is None
        A = np.diag([1.0, 50.0])
        _, report = minimize_objective(
            quadratic(A, np.zeros(2)), np.array([1.0, 1.0]), config
        )
        # tolerance-driven run is unaffected: it converges rather than bailing
        assert report.converged

    def test_stall_exit_on_kinked_valley(self):
        # steep V in x0 pins steps to ~1e-9 while the gradient norm stays ~1;
        # the stall rule should cut the run short well before max_iters
        def objective(x):
            return 1e9 * abs(x[0]) + 0.5 * x[1] ** 2, np.array(
                [1e9 * np.sign(x[0]), x[1]]
            )

        config = SolverConfig(method=Method.GD, max_iters=5000, grad_tol=1e-6)
        _, report = minimize_objective(objective, np.array([1.0, 1.0]), config)
        assert not report.converged
        assert report.iterations < 200


class TestUpdateStates:
    def test_bfgs_skips_nonpositive_curvature(self):
        state = BfgsState(2)
        before = state.h_inv.copy()
        assert not state.update(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
        np.testing.assert_array_equal(state.h_inv, before)
        assert state.updates == 0

    def test_bfgs_first_update_rescales(self):
        state = BfgsState(2)
        s = np.array([1.0, 0.0])
        y = np.array([4.0, 0.0])
        assert state.update(s, y)
        # secant condition: H y = s
        np.testing.assert_allclose(state.h_inv @ y, s, atol=1e-12)

    def test_lbfgs_memory_bound(self):
        state = LbfgsState(memory=3)
        rng = np.random.default_rng(0)
        for _ in range(10):
            s = rng.normal(size=4)
            y = s + 0.1 * rng.normal(size=4)
            if float(y @ s) > 0:
                state.update(s, y)
        assert len(state.pairs) <= 3

    def test_lbfgs_empty_direction_is_steepest_descent(self):
        state = LbfgsState(memory=5)
        g = np.array([1.0, -2.0])
        np.testing.assert_array_equal(state.direction(g), -g)


class TestConfigValidation:
    def test_bad_values_raise(self):
        with pytest.raises(ValueError):
            SolverConfig(max_iters=-1)
        with pytest.raises(ValueError):
            SolverConfig(armijo_c=0.0)
        with pytest.raises(ValueError):
            SolverConfig(armijo_c=1.0)
        with pytest.raises(ValueError):
            SolverConfig(backtrack_factor=1.0)
        with pytest.raises(ValueError):
            SolverConfig(lbfgs_memory=0)
        with pytest.raises(ValueError):
            SolverConfig(progress_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(progress_patience=0)


class TestOnTrajectories:
    def test_minimize_smooths_around_obstacle(self):
        env = EnvironmentMap((Obstacle((0.0, 0.0), 1.0),))
        model = CostModel(CostWeights(), env)
        init = straight_line_init((-5, 0.3), (5, 0.3), 9)
        config = SolverConfig(method=Method.BFGS, max_iters=300, grad_tol=1e-5)
        solved, report = minimize(model, init, config)
        v0, _ = model.total_cost(init)
        v1, _ = model.total_cost(solved)
        assert v1 < v0
        # the solved path pushes its nearest waypoint out of the margin zone
        dists, _ = env.signed_distance_batch(solved.waypoints)
        assert dists.min() > 0.0

    def test_empty_map_stays_straight(self):
        env = EnvironmentMap(())
        model = CostModel(CostWeights(), env)
        init = straight_line_init((-5, 0), (5, 0), 7)
        solved, report = minimize(model, init, SolverConfig(grad_tol=1e-10))
        assert report.converged
        assert report.iterations == 0
        np.testing.assert_array_equal(solved.waypoints, init.waypoints)
