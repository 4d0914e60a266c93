"""Waypoint trajectories and the smoothness + collision objective they are
optimized under.

A trajectory is a fixed start point, ``K`` free interior waypoints and a
fixed goal point, sampled ``dt`` seconds apart.  The decision vector seen by
the solver is the row-major flattening of the interior waypoints, so it has
``n = 2K`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .env import EnvironmentMap

# Spacing used for the central-difference Hessian of the total cost.
HESSIAN_STEP = 1e-5
_HESSIAN_MAX_DIM = 200


@dataclass(frozen=True, eq=False)
class Trajectory:
    start: np.ndarray
    goal: np.ndarray
    waypoints: np.ndarray  # (K, 2) interior points
    dt: float = 1.0

    def __post_init__(self):
        start = np.asarray(self.start, dtype=float).reshape(2)
        goal = np.asarray(self.goal, dtype=float).reshape(2)
        wps = np.asarray(self.waypoints, dtype=float)
        if wps.ndim != 2 or wps.shape[1] != 2 or wps.shape[0] < 1:
            raise ValueError(f"waypoints must be (K, 2) with K >= 1, got {wps.shape}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal", goal)
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def num_waypoints(self) -> int:
        return self.waypoints.shape[0]

    def decision_vector(self) -> np.ndarray:
        return self.waypoints.reshape(-1).copy()

    def with_decision_vector(self, x) -> "Trajectory":
        wps = np.asarray(x, dtype=float).reshape(self.waypoints.shape)
        return replace(self, waypoints=wps)

    def full_points(self) -> np.ndarray:
        """All points including the fixed endpoints, shape ``(K + 2, 2)``."""
        return np.vstack([self.start, self.waypoints, self.goal])


def straight_line_init(start, goal, num_waypoints: int, dt: float = 1.0) -> Trajectory:
    """Interior waypoints evenly spaced on the start-goal segment."""
    if num_waypoints < 1:
        raise ValueError("num_waypoints must be >= 1")
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    ts = np.linspace(0.0, 1.0, num_waypoints + 2)[1:-1]
    wps = start[None, :] + ts[:, None] * (goal - start)[None, :]
    return Trajectory(start, goal, wps, dt)


def _second_differences(points: np.ndarray) -> np.ndarray:
    # points is (K + 2, 2); one second difference centered at each interior point
    return points[2:] - 2.0 * points[1:-1] + points[:-2]


def _smoothness(start, goal, wps, dt):
    pts = np.vstack([start, wps, goal])
    d2 = _second_differences(pts)
    scale = 1.0 / dt**4
    value = scale * float(np.sum(d2 * d2))
    padded = np.zeros((wps.shape[0] + 2, 2))
    padded[1:-1] = d2
    grad = 2.0 * scale * (padded[:-2] - 2.0 * padded[1:-1] + padded[2:])
    return value, grad


def hinge_penalty(d, epsilon: float):
    """Obstacle penalty on a signed distance: ``(d - eps)^2 / (2 eps)`` inside
    the margin, zero beyond it."""
    d = np.asarray(d, dtype=float)
    active = d < epsilon
    out = np.zeros_like(d)
    out[active] = (d[active] - epsilon) ** 2 / (2.0 * epsilon)
    return out if out.ndim else float(out)


def _collision(wps, env_map, epsilon):
    dists, sdf_grads = env_map.signed_distance_batch(wps)
    active = dists < epsilon
    value = float(np.sum((dists[active] - epsilon) ** 2)) / (2.0 * epsilon)
    grad = np.zeros_like(wps)
    grad[active] = ((dists[active] - epsilon) / epsilon)[:, None] * sdf_grads[active]
    return value, grad


def smoothness_cost(traj: Trajectory) -> tuple[float, np.ndarray]:
    """Sum of squared second differences over the interior points (endpoints
    enter the stencils), scaled by ``1/dt^4``.  Returns value and the gradient
    with respect to the decision vector."""
    value, grad = _smoothness(traj.start, traj.goal, traj.waypoints, traj.dt)
    return value, grad.reshape(-1)


def collision_cost(
    traj: Trajectory, env_map: EnvironmentMap, epsilon: float
) -> tuple[float, np.ndarray]:
    """Hinge penalty of the signed distance summed over interior waypoints."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    value, grad = _collision(traj.waypoints, env_map, epsilon)
    return value, grad.reshape(-1)


@dataclass(frozen=True)
class CostWeights:
    smoothness: float = 1.0
    collision: float = 10.0
    epsilon: float = 0.8

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True, eq=False)
class CostModel:
    """Weighted sum of the smoothness and collision terms over a fixed map."""

    weights: CostWeights
    env_map: EnvironmentMap

    def total_cost(self, traj: Trajectory) -> tuple[float, np.ndarray]:
        w = self.weights
        sv, sg = _smoothness(traj.start, traj.goal, traj.waypoints, traj.dt)
        cv, cg = _collision(traj.waypoints, self.env_map, w.epsilon)
        value = w.smoothness * sv + w.collision * cv
        grad = (w.smoothness * sg + w.collision * cg).reshape(-1)
        return value, grad

    def bind(self, template: Trajectory):
        """Objective ``f(x) -> (value, grad)`` over the decision vector, with
        the template's endpoints and dt held fixed."""
        start, goal, dt = template.start, template.goal, template.dt
        shape = template.waypoints.shape
        w = self.weights
        env_map = self.env_map

        def objective(x):
            wps = x.reshape(shape)
            sv, sg = _smoothness(start, goal, wps, dt)
            cv, cg = _collision(wps, env_map, w.epsilon)
            return (
                w.smoothness * sv + w.collision * cv,
                (w.smoothness * sg + w.collision * cg).reshape(-1),
            )

        return objective

    def hessian(self, traj: Trajectory) -> np.ndarray:
        """Symmetrized central finite differences of the analytic gradient."""
        x = traj.decision_vector()
        n = x.size
        if n > _HESSIAN_MAX_DIM:
            raise ValueError(f"refusing Hessian for n={n} > {_HESSIAN_MAX_DIM}")
        objective = self.bind(traj)
        h = HESSIAN_STEP
        cols = np.empty((n, n))
        for j in range(n):
            xp = x.copy()
            xp[j] += h
            xm = x.copy()
            xm[j] -= h
            _, gp = objective(xp)
            _, gm = objective(xm)
            cols[:, j] = (gp - gm) / (2.0 * h)
        return (cols + cols.T) / 2.0


def trajectory_to_text(traj: Trajectory) -> str:
    """Serialize as a ``start sx sy goal gx gy dt v`` header plus one ``x y``
    line per interior waypoint."""
    # float() strips numpy scalar wrappers so repr stays parseable; Python's
    # shortest-repr guarantees the round trip is exact.
    s = [float(v) for v in traj.start]
    g = [float(v) for v in traj.goal]
    lines = [f"start {s[0]!r} {s[1]!r} goal {g[0]!r} {g[1]!r} dt {float(traj.dt)!r}"]
    for x, y in traj.waypoints:
        lines.append(f"{float(x)!r} {float(y)!r}")
    return "\n".join(lines) + "\n"


def trajectory_from_text(text: str) -> Trajectory:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trajectory text")
    header = lines[0].split()
    if (
        len(header) != 8
        or header[0] != "start"
        or header[3] != "goal"
        or header[6] != "dt"
    ):
        raise ValueError(f"malformed trajectory header: {lines[0]!r}")
    start = (float(header[1]), float(header[2]))
    goal = (float(header[4]), float(header[5]))
    dt = float(header[7])
    wps = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed waypoint line: {ln!r}")
        wps.append((float(parts[0]), float(parts[1])))
    if not wps:
        raise ValueError("trajectory must have at least one interior waypoint")
    return Trajectory(start, goal, np.array(wps), dt)
