"""First-order trajectory solvers: gradient descent, BFGS and L-BFGS with
Armijo backtracking line search.  Everything is deterministic — identical
inputs give bit-identical reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .planner import CostModel, Trajectory

_CURVATURE_FLOOR = 1e-10
_MIN_STEP = 1e-16
# An accepted step this small relative to the gradient norm means the
# quasi-Newton model sees a near-infinite curvature wall; a run of such steps
# means the iterate is pinned on a kink of the objective (the distance field
# is only piecewise smooth) and further iterations are wasted effort.
_STALL_STEP_RATIO = 1e-6
_STALL_PATIENCE = 5


class Method(Enum):
    GD = "gd"
    BFGS = "bfgs"
    LBFGS = "lbfgs"


class LineSearch(Enum):
    BACKTRACKING = "backtracking"


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.BFGS
    max_iters: int = 200
    grad_tol: float = 1e-6
    lbfgs_memory: int = 10
    line_search: LineSearch = LineSearch.BACKTRACKING
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    record_inv_hessians: bool = False
    # Optional early exit: stop (without claiming convergence) after
    # progress_patience consecutive accepted steps whose objective decrease
    # is at most progress_tol * max(1, |f|).  Off by default so that pure
    # tolerance-driven runs are unaffected; replanning loops switch it on to
    # cut off barely-improving tails on the piecewise-smooth cost.
    progress_tol: float | None = None
    progress_patience: int = 3

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (0 < self.armijo_c < 1):
            raise ValueError("armijo_c must lie in (0, 1)")
        if not (0 < self.backtrack_factor < 1):
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.lbfgs_memory < 1:
            raise ValueError("lbfgs_memory must be >= 1")
        if self.progress_tol is not None and self.progress_tol <= 0:
            raise ValueError("progress_tol must be positive when set")
        if self.progress_patience < 1:
            raise ValueError("progress_patience must be >= 1")


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    final_value: float
    final_grad_norm: float
    iterates: list = field(default_factory=list)
    condition_numbers: list | None = None
    error: str | None = None
    method: Method = Method.BFGS
    inv_hessian: np.ndarray | None = None
    inv_hessian_trace: list | None = None


class BfgsState:
    """Dense inverse-Hessian approximation, identity until the first update.

    Updates with non-positive curvature (``y.s <= 1e-10``) are skipped so the
    approximation stays positive definite.
    """

    def __init__(self, n: int):
        self.h_inv = np.eye(n)
        self.updates = 0

    def direction(self, grad: np.ndarray) -> np.ndarray:
        return -self.h_inv @ grad

    def update(self, s: np.ndarray, y: np.ndarray) -> bool:
        ys = float(y @ s)
        if ys <= _CURVATURE_FLOOR:
            return False
        if self.updates == 0:
            # Rescale the identity to the first pair's curvature before the
            # first update; this greatly shortens the burn-in phase.
            self.h_inv = self.h_inv * (ys / float(y @ y))
        rho = 1.0 / ys
        hy = self.h_inv @ y
        # (I - rho s y') H (I - rho y s') + rho s s'
        shy = np.outer(s, hy)
        self.h_inv = (
            self.h_inv
            - rho * (shy + shy.T)
            + rho * rho * float(y @ hy) * np.outer(s, s)
            + rho * np.outer(s, s)
        )
        self.updates += 1
        return True


class LbfgsState:
    """Limited-memory pair store with the standard two-loop recursion."""

    def __init__(self, memory: int):
        self.memory = memory
        self.pairs: list[tuple[np.ndarray, np.ndarray, float]] = []

    def direction(self, grad: np.ndarray) -> np.ndarray:
        q = grad.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if self.pairs:
            s, y, _ = self.pairs[-1]
            gamma = float(s @ y) / float(y @ y)
            q *= gamma
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q

    def update(self, s: np.ndarray, y: np.ndarray) -> bool:
        ys = float(y @ s)
        if ys <= _CURVATURE_FLOOR:
            return False
        self.pairs.append((s, y, 1.0 / ys))
        if len(self.pairs) > self.memory:
            self.pairs.pop(0)
        return True


def _finite(value, grad) -> bool:
    return np.isfinite(value) and np.all(np.isfinite(grad))


def minimize_objective(objective, x0, config: SolverConfig) -> tuple[np.ndarray, SolverReport]:
    """Minimize ``objective(x) -> (value, grad)`` from ``x0``.

    Accepted iterates decrease the objective monotonically; the best (last
    accepted) iterate is returned.  A NaN or Inf value/gradient aborts the
    solve with ``error='nonfinite-objective'`` instead of raising.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    report = SolverReport(
        converged=False,
        iterations=0,
        final_value=np.nan,
        final_grad_norm=np.nan,
        iterates=[x.copy()],
        method=config.method,
    )

    value, grad = objective(x)
    if not _finite(value, grad):
        report.error = "nonfinite-objective"
        report.final_value = float(value)
        report.final_grad_norm = float(np.linalg.norm(grad))
        return x, report

    bfgs = BfgsState(n) if config.method is Method.BFGS else None
    lbfgs = LbfgsState(config.lbfgs_memory) if config.method is Method.LBFGS else None
    stalled = 0
    no_progress = 0
    if bfgs is not None:
        report.inv_hessian = bfgs.h_inv
        if config.record_inv_hessians:
            report.inv_hessian_trace = [bfgs.h_inv.copy()]

    while True:
        grad_norm = float(np.linalg.norm(grad))
        report.final_value = float(value)
        report.final_grad_norm = grad_norm
        if grad_norm <= config.grad_tol:
            report.converged = True
            return x, report
        if report.iterations >= config.max_iters:
            return x, report

        if bfgs is not None:
            direction = bfgs.direction(grad)
        elif lbfgs is not None:
            direction = lbfgs.direction(grad)
        else:
            direction = -grad
        slope = float(grad @ direction)
        if slope >= 0.0:  # quasi-Newton safeguard: fall back to steepest descent
            direction = -grad
            slope = -grad_norm * grad_norm

        step = config.initial_step
        accepted = None
        while step >= _MIN_STEP:
            candidate = x + step * direction
            cand_value, cand_grad = objective(candidate)
            if not _finite(cand_value, cand_grad):
                report.error = "nonfinite-objective"
                return x, report
            if cand_value <= value + config.armijo_c * step * slope:
                accepted = (candidate, cand_value, cand_grad)
                break
            step *= config.backtrack_factor
        if accepted is None:
            return x, report  # line search stalled; keep the best iterate

        new_x, new_value, new_grad = accepted
        if float(np.linalg.norm(new_x - x)) <= _STALL_STEP_RATIO * grad_norm:
            stalled += 1
        else:
            stalled = 0
        if config.progress_tol is not None:
            if value - new_value <= config.progress_tol * max(1.0, abs(value)):
                no_progress += 1
            else:
                no_progress = 0
        if bfgs is not None:
            bfgs.update(new_x - x, new_grad - grad)
            report.inv_hessian = bfgs.h_inv
            if config.record_inv_hessians:
                report.inv_hessian_trace.append(bfgs.h_inv.copy())
        elif lbfgs is not None:
            lbfgs.update(new_x - x, new_grad - grad)
        x, value, grad = new_x, new_value, new_grad
        report.iterations += 1
        report.iterates.append(x.copy())
        if stalled >= _STALL_PATIENCE or no_progress >= config.progress_patience:
            report.final_value = float(value)
            report.final_grad_norm = float(np.linalg.norm(grad))
            return x, report


def minimize(model: CostModel, init: Trajectory, config: SolverConfig) -> tuple[Trajectory, SolverReport]:
    """Minimize the model's total cost over the interior waypoints of ``init``."""
    objective = model.bind(init)
    x, report = minimize_objective(objective, init.decision_vector(), config)
    return init.with_decision_vector(x), report


def bfgs_inverse_hessian(report: SolverReport) -> np.ndarray:
    """Final inverse-Hessian approximation of a BFGS run."""
    if report.method is not Method.BFGS or report.inv_hessian is None:
        raise ValueError(f"inverse Hessian not available for method {report.method}")
    return report.inv_hessian
