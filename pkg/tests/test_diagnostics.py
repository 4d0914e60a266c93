"""Tests for the Jacobi eigensolver, condition numbers and the obstacle
sweep.

The eigensolver is checked against an independently written QR iteration
(see oracles.py) so the two implementations share no code path.
"""

import numpy as np
import pytest

from oracles import qr_eigenvalues
from planattack.diagnostics import (
    SINGULAR_FLOOR,
    SpectralReport,
    SweepOutcome,
    condition_number,
    eigen_symmetric,
    fill_condition_numbers,
    obstacle_sweep,
    sweep_to_csv,
)
from planattack.env import Bounds, EnvironmentMap
from planattack.planner import CostModel, CostWeights, straight_line_init
from planattack.solver import SolverConfig, minimize


def random_symmetric(rng, n, scale=1.0):
    m = rng.normal(scale=scale, size=(n, n))
    return (m + m.T) / 2.0


class TestOracleSelfCheck:
    def test_qr_oracle_on_known_spectrum(self):
        rng = np.random.default_rng(7)
        eigs = np.array([-3.0, -0.5, 1.0, 2.5, 9.0])
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        a = q @ np.diag(eigs) @ q.T
        np.testing.assert_allclose(qr_eigenvalues(a), eigs, atol=1e-9)


class TestEigenSymmetric:
    def test_diagonal(self):
        np.testing.assert_allclose(
            eigen_symmetric(np.diag([3.0, -1.0, 2.0])), [-1.0, 2.0, 3.0]
        )

    def test_known_2x2(self):
        # eigenvalues of [[2,1],[1,2]] are 1 and 3
        np.testing.assert_allclose(
            eigen_symmetric(np.array([[2.0, 1.0], [1.0, 2.0]])), [1.0, 3.0], atol=1e-12
        )

    def test_constructed_spectrum(self):
        rng = np.random.default_rng(21)
        eigs = np.sort(rng.uniform(-5, 5, size=8))
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        a = q @ np.diag(eigs) @ q.T
        np.testing.assert_allclose(eigen_symmetric((a + a.T) / 2), eigs, atol=1e-9)

    def test_matches_qr_oracle_on_random_matrices(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 7, 15):
            a = random_symmetric(rng, n, scale=3.0)
            np.testing.assert_allclose(
                eigen_symmetric(a), qr_eigenvalues(a), atol=1e-8
            )

    def test_trace_and_frobenius_invariants(self):
        rng = np.random.default_rng(13)
        a = random_symmetric(rng, 10)
        eigs = eigen_symmetric(a)
        assert eigs.sum() == pytest.approx(np.trace(a), abs=1e-9)
        assert np.sum(eigs**2) == pytest.approx(np.sum(a * a), abs=1e-9)

    def test_empty_and_1x1(self):
        assert eigen_symmetric(np.zeros((0, 0))).size == 0
        np.testing.assert_array_equal(eigen_symmetric([[4.0]]), [4.0])

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            eigen_symmetric(np.zeros((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            eigen_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            eigen_symmetric(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestConditionNumber:
    def test_identity(self):
        report = condition_number(np.eye(4))
        assert report.condition_number == 1.0

    def test_diagonal_ratio(self):
        report = condition_number(np.diag([1.0, 10.0]))
        assert report.condition_number == pytest.approx(10.0)
        assert report.min_abs_eigenvalue == pytest.approx(1.0)

    def test_sign_insensitive(self):
        report = condition_number(np.diag([-4.0, 2.0]))
        assert report.condition_number == pytest.approx(2.0)

    def test_singular_reports_inf(self):
        report = condition_number(np.diag([1.0, 0.0]))
        assert report.condition_number == float("inf")
        assert report.min_abs_eigenvalue <= SINGULAR_FLOOR

    def test_report_equality(self):
        a = condition_number(np.diag([1.0, 3.0]))
        b = condition_number(np.diag([1.0, 3.0]))
        c = condition_number(np.diag([1.0, 4.0]))
        assert a == b
        assert a != c
        assert a.__eq__(42) is NotImplemented

    def test_spectral_report_fields(self):
        report = condition_number(np.diag([2.0, 8.0]))
        assert isinstance(report, SpectralReport)
        np.testing.assert_allclose(report.eigenvalues, [2.0, 8.0])


class TestFillConditionNumbers:
    def test_one_kappa_per_iterate(self):
        env = EnvironmentMap(())
        model = CostModel(CostWeights(), env)
        init = straight_line_init((-5, 0), (5, 0), 4)
        bent = init.with_decision_vector(init.decision_vector() + 0.5)
        _, report = minimize(model, bent, SolverConfig(max_iters=5, grad_tol=1e-12))
        fill_condition_numbers(report, model, init)
        assert len(report.condition_numbers) == len(report.iterates)
        # obstacle-free Hessian is constant across iterates
        assert report.condition_numbers[0] == pytest.approx(
            report.condition_numbers[-1]
        )


class TestObstacleSweep:
    def setup_method(self):
        self.base = CostModel(
            CostWeights(), EnvironmentMap((), Bounds(-6, -6, 6, 6))
        )

    def test_cell_centers_and_count(self):
        cells = obstacle_sweep(
            self.base, (-5, 0), (5, 0), 3, grid_size=2,
            solver_config=SolverConfig(max_iters=30, grad_tol=1e-4),
        )
        assert len(cells) == 4
        positions = {c.position for c in cells}
        assert positions == {(-3.0, -3.0), (3.0, -3.0), (-3.0, 3.0), (3.0, 3.0)}

    def test_remote_obstacle_is_success(self):
        cells = obstacle_sweep(
            self.base, (-5, -5), (5, -5), 3, grid_size=1,
            solver_config=SolverConfig(max_iters=100, grad_tol=1e-6),
            obstacle_radius=0.5,
        )
        # the single cell sits at the origin, 5 away from the path
        assert cells[0].outcome is SweepOutcome.SUCCESS
        assert np.isfinite(cells[0].kappa)

    def test_cap_exhaustion_is_failure(self):
        cells = obstacle_sweep(
            self.base, (-5, 0), (5, 0), 5, grid_size=1,
            solver_config=SolverConfig(max_iters=2, grad_tol=1e-12),
        )
        assert cells[0].outcome is SweepOutcome.FAILURE
        assert cells[0].iterations == 2

    def test_grid_size_validation(self):
        with pytest.raises(ValueError):
            obstacle_sweep(
                self.base, (-5, 0), (5, 0), 3, grid_size=0,
                solver_config=SolverConfig(),
            )

    def test_csv_round_trip(self, tmp_path):
        cells = obstacle_sweep(
            self.base, (-5, 0), (5, 0), 3, grid_size=2,
            solver_config=SolverConfig(max_iters=30, grad_tol=1e-4),
        )
        path = tmp_path / "sweep.csv"
        sweep_to_csv(cells, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "cx,cy,outcome,iterations,kappa"
        assert len(lines) == 5
        first = lines[1].split(",")
        assert float(first[0]) == cells[0].position[0]
        assert first[2] in ("success", "failure")
