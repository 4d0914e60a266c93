"""Closed-loop simulation of a replanning target robot under attack, plus
batch statistics over seeded trials.

Each simulation step follows a fixed order: the target replans with the
adversary inserted into its map as one more obstacle, advances along the new
plan, the adversary picks and takes its move, and the step is classified.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .adversary import (
    AttackKind,
    AttackPolicy,
    GPModel,
    adversary_step,
    bayes_opt_attack,
    config_to_position,
    deviation_angle,
    heuristic_attack,
    wrap_angle,
)
from .diagnostics import condition_number
from .env import EnvironmentMap, MapSpec, WORLD_BOUNDS, generate_map
from .planner import CostModel, CostWeights, straight_line_init
from .solver import SolverConfig, minimize

_SPAWN_ATTEMPTS = 10_000


class WeightsPreset(Enum):
    DEFAULT = "default"
    CONSERVATIVE = "conservative"


# Cost presets: the conservative profile raises the collision weight 5x.
WEIGHT_PRESETS = {
    WeightsPreset.DEFAULT: CostWeights(smoothness=1.0, collision=10.0, epsilon=0.8),
    WeightsPreset.CONSERVATIVE: CostWeights(smoothness=1.0, collision=50.0, epsilon=0.8),
}

# Gradient norms scale with the cost weights, so a preset with a heavier
# collision weight needs a proportionally looser replan exit tolerance to
# stop at the same solve quality.  The factor is calibrated, not derived:
# scaling by the full weight ratio over-loosens collision compliance, and no
# scaling at all turns every evasive reroute into a mid-reshape abort.
_PRESET_GRAD_TOL_SCALE = {
    WeightsPreset.DEFAULT: 1.0,
    WeightsPreset.CONSERVATIVE: 3.0,
}


class TrialOutcome(Enum):
    SUCCESS = "success"
    COLL_M = "collm"  # hit a static map obstacle
    COLL_A = "colla"  # got too close to the adversary
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TrialConfig:
    map_spec: MapSpec = MapSpec()
    weights: WeightsPreset = WeightsPreset.DEFAULT
    # Replanning needs a followable plan inside the iteration budget, not a
    # benchmark-grade stationary point: trials default to a looser gradient
    # tolerance plus the relative-progress cutoff (the piecewise-smooth cost
    # pins iterates on distance-field kinks where no tolerance is reachable)
    # and a deeper per-replan budget, sized so that evasive reroutes around a
    # moving obstacle can actually complete.
    solver: SolverConfig = SolverConfig(grad_tol=0.05, progress_tol=1e-6, max_iters=300)
    policy: AttackPolicy = AttackPolicy()
    seed: int = 0
    target_speed: float = 1.0
    adversary_vmax: float = 1.0
    safety_radius: float = 0.6
    ignore_safety_radius: bool = False
    max_steps: int = 120
    sim_dt: float = 0.5
    goal_radius: float = 0.5
    adversary_radius: float = 0.3
    num_waypoints: int = 20
    traj_dt: float = 1.0
    spawn_band: float = 5.0
    log_kappa: bool = True

    def __post_init__(self):
        if self.adversary_vmax > self.target_speed:
            raise ValueError("adversary_vmax must not exceed target_speed")
        for name in ("target_speed", "sim_dt", "goal_radius", "adversary_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class StepStats:
    iterations: int
    kappa_max: float
    replan_failed: bool
    target_pos: tuple[float, float]
    adversary_pos: tuple[float, float]


@dataclass(frozen=True)
class TrialRecord:
    outcome: TrialOutcome
    steps: int
    per_step: tuple[StepStats, ...]
    seed: int


def _point_along(points: np.ndarray, arc: float) -> np.ndarray:
    """Point at arc length ``arc`` along a polyline, clamped to its ends."""
    if arc <= 0.0:
        return points[0].copy()
    pos = points[0]
    remaining = arc
    for nxt in points[1:]:
        seg = nxt - pos
        length = float(np.hypot(seg[0], seg[1]))
        if remaining <= length and length > 0.0:
            return pos + seg * (remaining / length)
        remaining -= length
        pos = nxt
    return points[-1].copy()


# The route the target sets out with is planned before the clock starts, so
# it gets a deeper iteration budget than the per-step replans.
_SETUP_BUDGET_FACTOR = 10

# How far ahead (in seconds of adversary motion) a safety-respecting target
# inflates the obstacle it plans around: the adversary keeps closing in while
# the freshly planned step is being executed, so planning against its current
# position alone would leave no slack at all.
_PLANNING_LOOKAHEAD_TIME = 0.5


def _consume_waypoints(points: np.ndarray, arc: float) -> np.ndarray | None:
    """Warm-start waypoints from a plan polyline after travelling ``arc``
    meters along it: interior waypoints already passed are dropped and the
    same number of fresh ones are padded in before the goal (None once the
    whole plan has been consumed).

    Waypoints not yet reached are reused verbatim — they already sit where
    the previous solve put them — so the only perturbation a nominal replan
    sees is the tail padding.
    """
    interior = points[1:-1]
    goal = points[-1]
    seg = np.diff(points, axis=0)
    cum = np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))
    passed = int(np.searchsorted(cum[: len(interior)], arc, side="right"))
    if passed == 0:
        return interior
    kept = interior[passed:]
    if not len(kept):
        return None  # whole plan consumed; caller restarts from a line
    frac = np.arange(1, passed + 1)[:, None] / (passed + 1)
    pad = kept[-1] + frac * (goal - kept[-1])
    return np.vstack([kept, pad])


class _HeuristicState:
    def __init__(self):
        self.prev_heading: float | None = None

    def attack(self, target, heading, policy, sim_dt):
        if self.prev_heading is None:
            turn_rate = 0.0
        else:
            turn_rate = wrap_angle(heading - self.prev_heading) / sim_dt
        self.prev_heading = heading
        theta, r = heuristic_attack(heading, turn_rate, sim_dt, policy)
        return config_to_position(target, theta, r)


class _BayesOptState:
    def __init__(self):
        self.model: GPModel | None = None

    def attack(self, target, policy, probe, rng):
        (theta, r), self.model = bayes_opt_attack(self.model, policy, probe, rng)
        return config_to_position(target, theta, r)


def _spawn_adversary(env: EnvironmentMap, start, radius, rng) -> np.ndarray:
    for _ in range(_SPAWN_ATTEMPTS):
        pos = env.bounds.sample(rng)
        if env.min_separation(pos) < radius:
            continue
        if np.linalg.norm(pos - start) < 2.0:
            continue
        return pos
    raise RuntimeError("could not place the adversary")


def _derived_map_spec(config: TrialConfig) -> MapSpec:
    mixed = np.random.SeedSequence([config.map_spec.seed, config.seed])
    return replace(config.map_spec, seed=int(mixed.generate_state(1)[0]))


def run_trial(config: TrialConfig) -> TrialRecord:
    """Simulate one seeded trial and classify it.

    The outcome is exactly one of: the target reached the goal, it crossed a
    static obstacle surface, it crossed the adversary's safety envelope, or
    the trial timed out (either a replan exhausted its iteration cap, or the
    step cap was reached).  When a replan fails on a non-finite value the
    target keeps following its most recent successful plan.
    """
    record, _ = run_trial_with_gp(config)
    return record


def run_trial_with_gp(config: TrialConfig) -> tuple[TrialRecord, GPModel | None]:
    """:func:`run_trial` that also returns the attack's final surrogate model
    (None unless the policy ran Bayesian optimization)."""
    rng = np.random.default_rng(config.seed)
    band = config.spawn_band
    start = np.array([WORLD_BOUNDS.xmin + 1.0, rng.uniform(-band, band)])
    goal = np.array([WORLD_BOUNDS.xmax - 1.0, rng.uniform(-band, band)])
    env = generate_map(_derived_map_spec(config), start=start, goal=goal)
    weights = WEIGHT_PRESETS[config.weights]
    trial_solver = replace(
        config.solver,
        grad_tol=config.solver.grad_tol * _PRESET_GRAD_TOL_SCALE[config.weights],
    )

    policy = config.policy
    attacking = policy.kind is not AttackKind.NONE
    adversary = _spawn_adversary(env, start, config.adversary_radius, rng) if attacking else None
    heuristic_state = _HeuristicState()
    bo_state = _BayesOptState()
    line_heading = rng.uniform(-math.pi, math.pi) if policy.kind is AttackKind.RANDOM_LINE else None

    advance = config.target_speed * config.sim_dt
    target = start.copy()
    plan_points: np.ndarray | None = None
    plan_progress = 0.0
    heading = math.atan2(goal[1] - start[1], goal[0] - start[0])
    # A respected safety radius is part of how the target plans: the
    # adversary enters the map inflated by it plus a lookahead of adversary
    # motion (it keeps moving while the plan is followed).  Ignoring the
    # safety radius means planning against the adversary's physical extent
    # only.
    if config.ignore_safety_radius:
        planning_radius = config.adversary_radius
    else:
        planning_radius = (
            config.adversary_radius
            + config.safety_radius
            + config.adversary_vmax * _PLANNING_LOOKAHEAD_TIME
        )

    def plan_from(pos, env_map, warm=None, solver=None):
        model = CostModel(weights, env_map)
        init = straight_line_init(pos, goal, config.num_waypoints, config.traj_dt)
        if warm is not None:
            init = init.with_decision_vector(warm.ravel())
        traj, report = minimize(model, init, solver or trial_solver)
        return model, traj, report

    def current_warm():
        # Replans start from the plan being followed rather than from
        # scratch; see _consume_waypoints.
        if plan_points is None:
            return None
        return _consume_waypoints(plan_points, plan_progress)

    def make_probe(pos_now, nominal_dir, warm):
        # One-replan probe: how far does the adversary at (theta, r) bend the
        # target's next velocity away from its unattacked direction?
        def probe(theta, r):
            adv = config_to_position(pos_now, theta, r)
            _, traj, report = plan_from(
                pos_now, env.with_adversary(adv, planning_radius), warm
            )
            if report.error is not None:
                return 0.0
            moved = _point_along(traj.full_points(), advance)
            return deviation_angle(moved - pos_now, nominal_dir)

        return probe

    def bow_waypoints(amplitude):
        # Laterally bowed variant of the straight-line init (sine bulge,
        # amplitude as a fraction of the start-goal span).
        base = straight_line_init(
            target, goal, config.num_waypoints, config.traj_dt
        ).full_points()
        chord = goal - target
        span = float(np.hypot(chord[0], chord[1]))
        if span < 1e-9:
            return base[1:-1]
        perp = np.array([-chord[1], chord[0]]) / span
        bulge = np.sin(np.pi * np.linspace(0.0, 1.0, len(base))[1:-1])
        return base[1:-1] + np.outer(bulge * amplitude * span, perp)

    # The target sets out with a route solved on the static map; the replans
    # inside the loop all warm-start from whatever plan is being followed.
    # Cold solves can jam on distance-field kinks, so the setup solve is
    # multistarted from a straight line and a few bowed detours, keeping the
    # first converged (else lowest-cost) result.
    setup_cfg = replace(
        trial_solver,
        max_iters=_SETUP_BUDGET_FACTOR * trial_solver.max_iters,
        progress_tol=None,
    )
    best = None
    for amp in (0.0, 0.15, -0.15, 0.3, -0.3):
        warm0 = bow_waypoints(amp) if amp else None
        _, traj0, report0 = plan_from(target, env, warm0, setup_cfg)
        if report0.error is None and (best is None or report0.final_value < best[1].final_value):
            best = (traj0, report0)
        if report0.error is None and report0.converged:
            break
    if best is not None:
        plan_points = best[0].full_points()

    records: list[StepStats] = []
    outcome: TrialOutcome | None = None

    for step in range(1, config.max_steps + 1):
        # (1) replan with the adversary as an extra obstacle
        if adversary is not None:
            planning_env = env.with_adversary(adversary, planning_radius)
        else:
            planning_env = env
        model, traj, report = plan_from(target, planning_env, current_warm())
        replan_failed = report.error is not None
        if not replan_failed:
            plan_points = traj.full_points()
            plan_progress = 0.0
        if config.log_kappa and not replan_failed:
            kappa = condition_number(model.hessian(traj)).condition_number
        else:
            kappa = float("nan")
        adversary_tuple = (
            (float(adversary[0]), float(adversary[1]))
            if adversary is not None
            else (float("nan"), float("nan"))
        )
        if not report.converged and not replan_failed and report.iterations >= trial_solver.max_iters:
            # The planner ran out of its per-replan iteration budget.
            records.append(
                StepStats(report.iterations, kappa, replan_failed,
                          (float(target[0]), float(target[1])), adversary_tuple)
            )
            outcome = TrialOutcome.TIMEOUT
            break

        # (2) advance along the freshest available plan
        prev_target = target
        if plan_points is not None:
            plan_progress += advance
            target = _point_along(plan_points, plan_progress)
        moved = target - prev_target
        if float(np.hypot(moved[0], moved[1])) > 1e-12:
            heading = math.atan2(moved[1], moved[0])

        # (3) adversary picks a destination and moves
        if adversary is not None:
            if policy.kind is AttackKind.HEURISTIC:
                attack_pos = heuristic_state.attack(target, heading, policy, config.sim_dt)
            elif policy.kind is AttackKind.BAYES_OPT:
                warm = current_warm()
                _, nominal, nominal_report = plan_from(target, env, warm)
                if nominal_report.error is None:
                    nominal_dir = _point_along(nominal.full_points(), advance) - target
                else:
                    nominal_dir = np.zeros(2)
                attack_pos = bo_state.attack(
                    target, policy, make_probe(target.copy(), nominal_dir, warm), rng
                )
            else:  # RANDOM_LINE
                attack_pos = adversary + 4.0 * config.adversary_vmax * config.sim_dt * np.array(
                    [math.cos(line_heading), math.sin(line_heading)]
                )
            adversary = adversary_step(
                adversary, attack_pos, config.adversary_vmax, config.sim_dt, env
            )
            adversary_tuple = (float(adversary[0]), float(adversary[1]))

        # (4) classify
        records.append(
            StepStats(report.iterations, kappa, replan_failed,
                      (float(target[0]), float(target[1])), adversary_tuple)
        )
        if adversary is not None:
            separation = float(np.linalg.norm(target - adversary)) - config.adversary_radius
            threshold = 0.0 if config.ignore_safety_radius else config.safety_radius
            if separation < threshold:
                outcome = TrialOutcome.COLL_A
                break
        if env.min_separation(target) < 0.0:
            outcome = TrialOutcome.COLL_M
            break
        if float(np.linalg.norm(target - goal)) <= config.goal_radius:
            outcome = TrialOutcome.SUCCESS
            break
        if step == config.max_steps:
            outcome = TrialOutcome.TIMEOUT
            break

    return TrialRecord(outcome, len(records), tuple(records), config.seed), bo_state.model


@dataclass(frozen=True)
class BatchSummary:
    policy: AttackKind
    weights: WeightsPreset
    n_trials: int
    success_rate: float
    collm_rate: float
    colla_rate: float
    timeout_rate: float
    se_success_rate: float
    se_collm_rate: float
    se_colla_rate: float
    se_timeout_rate: float
    mean_avg_iters: float
    se_avg_iters: float
    mean_max_iters: float
    se_max_iters: float


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else float("nan")
    return mean, se


def summarize(records, policy: AttackKind, weights: WeightsPreset) -> BatchSummary:
    n = len(records)
    if n == 0:
        raise ValueError("cannot summarize an empty batch")
    rates = {}
    for outcome in TrialOutcome:
        flags = [1.0 if r.outcome is outcome else 0.0 for r in records]
        rates[outcome] = _mean_se(flags)
    avg_iters = [float(np.mean([s.iterations for s in r.per_step])) for r in records]
    max_iters = [float(max(s.iterations for s in r.per_step)) for r in records]
    mean_avg, se_avg = _mean_se(avg_iters)
    mean_max, se_max = _mean_se(max_iters)
    return BatchSummary(
        policy=policy,
        weights=weights,
        n_trials=n,
        success_rate=rates[TrialOutcome.SUCCESS][0],
        collm_rate=rates[TrialOutcome.COLL_M][0],
        colla_rate=rates[TrialOutcome.COLL_A][0],
        timeout_rate=rates[TrialOutcome.TIMEOUT][0],
        se_success_rate=rates[TrialOutcome.SUCCESS][1],
        se_collm_rate=rates[TrialOutcome.COLL_M][1],
        se_colla_rate=rates[TrialOutcome.COLL_A][1],
        se_timeout_rate=rates[TrialOutcome.TIMEOUT][1],
        mean_avg_iters=mean_avg,
        se_avg_iters=se_avg,
        mean_max_iters=mean_max,
        se_max_iters=se_max,
    )


def run_batch(
    config: TrialConfig, n_trials: int, base_seed: int | None = None
) -> tuple[BatchSummary, list[TrialRecord]]:
    """Run ``n_trials`` independent trials with seeds ``base .. base+n-1``."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    base = config.seed if base_seed is None else base_seed
    records = [run_trial(replace(config, seed=base + i)) for i in range(n_trials)]
    return summarize(records, config.policy.kind, config.weights), records


def proximity_experiment(
    config: TrialConfig, radii, n_trials: int, base_seed: int | None = None
) -> list[tuple[float, BatchSummary]]:
    """Re-run the batch with the attack radius pinned to each value in
    ``radii`` and report the iteration statistics per radius."""
    results = []
    for radius in radii:
        r = float(radius)
        pinned = replace(config, policy=replace(config.policy, r_bounds=(r, r)))
        summary, _ = run_batch(pinned, n_trials, base_seed)
        results.append((r, summary))
    return results


def _fmt(value) -> str:
    return repr(float(value))


def write_step_csv(record: TrialRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["step", "iterations", "kappa_max", "replan_failed", "tx", "ty", "ax", "ay"]
        )
        for i, s in enumerate(record.per_step, start=1):
            writer.writerow(
                [
                    i,
                    s.iterations,
                    _fmt(s.kappa_max),
                    int(s.replan_failed),
                    _fmt(s.target_pos[0]),
                    _fmt(s.target_pos[1]),
                    _fmt(s.adversary_pos[0]),
                    _fmt(s.adversary_pos[1]),
                ]
            )


def write_trials_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "outcome", "steps", "avg_iters", "max_iters"])
        for r in records:
            iters = [s.iterations for s in r.per_step]
            writer.writerow(
                [r.seed, r.outcome.value, r.steps, _fmt(np.mean(iters)), max(iters)]
            )


def write_batch_csv(summaries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "policy", "weights", "n", "success", "collm", "colla", "timeout",
                "mean_avg_iters", "se_avg_iters", "mean_max_iters", "se_max_iters",
            ]
        )
        for s in summaries:
            writer.writerow(
                [
                    s.policy.value,
                    s.weights.value,
                    s.n_trials,
                    _fmt(s.success_rate),
                    _fmt(s.collm_rate),
                    _fmt(s.colla_rate),
                    _fmt(s.timeout_rate),
                    _fmt(s.mean_avg_iters),
                    _fmt(s.se_avg_iters),
                    _fmt(s.mean_max_iters),
                    _fmt(s.se_max_iters),
                ]
            )


def write_proximity_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["radius", "mean_avg_iters", "se_avg_iters", "mean_max_iters", "se_max_iters"]
        )
        for radius, s in results:
            writer.writerow(
                [
                    _fmt(radius),
                    _fmt(s.mean_avg_iters),
                    _fmt(s.se_avg_iters),
                    _fmt(s.mean_max_iters),
                    _fmt(s.se_max_iters),
                ]
            )
