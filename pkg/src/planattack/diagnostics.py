"""Spectral diagnostics for the planning objective: a dense symmetric
eigensolver, condition numbers, and an obstacle-position sweep that maps how
a single obstacle degrades the optimization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .env import EnvironmentMap, Obstacle
from .planner import CostModel, Trajectory, straight_line_init
from .solver import SolverConfig, minimize

_OFFDIAG_TOL = 1e-10
_MAX_SWEEPS = 100
_SYMMETRY_TOL = 1e-8
# |eigenvalue| floor below which a matrix is reported as numerically singular.
SINGULAR_FLOOR = 1e-12


def _jacobi_kernel(a, tol, max_sweeps):
    # Cyclic Jacobi rotations, in place.  Kept in njit-compatible form; the
    # module JIT-compiles it when numba is importable.
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if np.sqrt(off) < tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
    return max_sweeps


try:
    from numba import njit

    _jacobi_kernel = njit(cache=True)(_jacobi_kernel)
except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


def eigen_symmetric(matrix) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in ascending order, computed with
    cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
    below 1e-10."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.abs(m - m.T).max() > _SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    work = np.ascontiguousarray((m + m.T) / 2.0)
    _jacobi_kernel(work, _OFFDIAG_TOL, _MAX_SWEEPS)
    return np.sort(np.diag(work).copy())


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    condition_number: float
    min_abs_eigenvalue: float

    def __eq__(self, other):
        if not isinstance(other, SpectralReport):
            return NotImplemented
        return (
            np.array_equal(self.eigenvalues, other.eigenvalues)
            and self.condition_number == other.condition_number
            and self.min_abs_eigenvalue == other.min_abs_eigenvalue
        )


def condition_number(matrix) -> SpectralReport:
    """Ratio of the largest to smallest eigenvalue magnitude; reports inf for
    matrices whose smallest magnitude sits below the singularity floor."""
    eigenvalues = eigen_symmetric(matrix)
    magnitudes = np.abs(eigenvalues)
    min_abs = float(magnitudes.min())
    max_abs = float(magnitudes.max())
    kappa = max_abs / min_abs if min_abs > SINGULAR_FLOOR else float("inf")
    return SpectralReport(eigenvalues, kappa, min_abs)


def fill_condition_numbers(
    report, model: CostModel, template: Trajectory
) -> None:
    """Populate ``report.condition_numbers`` with the total-cost Hessian
    condition number at every accepted iterate."""
    kappas = []
    for x in report.iterates:
        traj = template.with_decision_vector(x)
        kappas.append(condition_number(model.hessian(traj)).condition_number)
    report.condition_numbers = kappas


class SweepOutcome(Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class SweepCell:
    position: tuple[float, float]
    outcome: SweepOutcome
    iterations: int
    kappa: float


def obstacle_sweep(
    base_model: CostModel,
    start,
    goal,
    num_waypoints: int,
    grid_size: int,
    solver_config: SolverConfig,
    obstacle_radius: float = 1.0,
    dt: float = 1.0,
) -> list[SweepCell]:
    """Place one extra obstacle at each cell of a ``grid_size`` x ``grid_size``
    lattice over the map bounds, solve from a straight-line initialization,
    and record outcome, iteration count and the Hessian condition number at
    the final iterate.

    A cell counts as a failure when any final waypoint is inside an obstacle,
    the solve aborted on a non-finite value, or the iteration cap was reached
    without meeting the gradient tolerance.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    bounds = base_model.env_map.bounds
    xs = bounds.xmin + (np.arange(grid_size) + 0.5) * (bounds.xmax - bounds.xmin) / grid_size
    ys = bounds.ymin + (np.arange(grid_size) + 0.5) * (bounds.ymax - bounds.ymin) / grid_size
    init = straight_line_init(start, goal, num_waypoints, dt)
    cells = []
    for cy in ys:
        for cx in xs:
            env_map = base_model.env_map.with_obstacle(Obstacle((cx, cy), obstacle_radius))
            model = CostModel(base_model.weights, env_map)
            traj, report = minimize(model, init, solver_config)
            dists, _ = env_map.signed_distance_batch(traj.waypoints)
            failed = (
                report.error is not None
                or bool(np.any(dists < 0.0))
                or (not report.converged and report.iterations >= solver_config.max_iters)
            )
            if report.error is None:
                kappa = condition_number(model.hessian(traj)).condition_number
            else:
                kappa = float("nan")
            cells.append(
                SweepCell(
                    position=(float(cx), float(cy)),
                    outcome=SweepOutcome.FAILURE if failed else SweepOutcome.SUCCESS,
                    iterations=report.iterations,
                    kappa=kappa,
                )
            )
    return cells


def sweep_to_csv(cells, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cx", "cy", "outcome", "iterations", "kappa"])
        for cell in cells:
            writer.writerow(
                [
                    repr(cell.position[0]),
                    repr(cell.position[1]),
                    cell.outcome.value,
                    cell.iterations,
                    repr(cell.kappa),
                ]
            )
