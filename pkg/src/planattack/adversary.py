"""Black-box attack machinery: a deviation measure on replanned velocities,
a Gaussian-process surrogate over attack configurations, expected-improvement
search, and the closed-form heuristic attack.

An attack configuration is a pair ``(theta, r)``: the adversary's position
expressed in polar coordinates centered on the target robot, with ``theta``
measured in the world frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .env import EnvironmentMap

_NORM_FLOOR = 1e-9
_CANDIDATES_PER_ITER = 512

# Maximum |d theta / dt| fed into the heuristic attack, and its lead factor.
HEURISTIC_TURN_CLAMP = math.pi / 2
HEURISTIC_LEAD_FACTOR = 0.5


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(float(angle) + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def deviation_angle(v, v_nominal) -> float:
    """Unsigned angle between a realized velocity and the nominal one, in
    [0, pi].  Either velocity being (numerically) zero reports no deviation."""
    v = np.asarray(v, dtype=float)
    v0 = np.asarray(v_nominal, dtype=float)
    nv = float(np.linalg.norm(v))
    n0 = float(np.linalg.norm(v0))
    if nv <= _NORM_FLOOR or n0 <= _NORM_FLOOR:
        return 0.0
    cosine = float(v @ v0) / (nv * n0)
    return math.acos(min(1.0, max(-1.0, cosine)))


@dataclass(frozen=True)
class Observation:
    theta: float
    r: float
    deviation: float

    def __post_init__(self):
        if not (self.r > 0.0):
            raise ValueError(f"observation radius must be positive, got {self.r}")
        if not (0.0 <= self.deviation <= math.pi):
            raise ValueError(f"deviation must lie in [0, pi], got {self.deviation}")


@dataclass(frozen=True)
class GPHyperparams:
    """Anisotropic squared-exponential kernel parameters.  Defaults are fixed
    rather than fitted; ``gp_fit(..., tune=True)`` grid-searches the length
    scales by marginal likelihood instead."""

    length_scales: tuple[float, float] = (0.5, 1.0)  # (theta [rad], r [m])
    signal_variance: float = 1.0
    noise_variance: float = 1e-4


def _kernel(a: np.ndarray, b: np.ndarray, hyper: GPHyperparams) -> np.ndarray:
    ls = np.asarray(hyper.length_scales, dtype=float)
    diff = a[:, None, :] - b[None, :, :]
    sq = np.sum((diff / ls) ** 2, axis=2)
    return hyper.signal_variance * np.exp(-0.5 * sq)


@dataclass(frozen=True, eq=False)
class GPModel:
    x_train: np.ndarray  # (n, 2) columns theta, r
    y_train: np.ndarray  # (n,)
    hyper: GPHyperparams
    chol: np.ndarray
    alpha: np.ndarray
    observations: tuple[Observation, ...]


def _fit(x: np.ndarray, y: np.ndarray, hyper: GPHyperparams):
    gram = _kernel(x, x, hyper) + hyper.noise_variance * np.eye(len(x))
    chol = np.linalg.cholesky(gram)  # raises LinAlgError when not PD
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, y))
    return chol, alpha


def _log_marginal_likelihood(x, y, hyper) -> float:
    chol, alpha = _fit(x, y, hyper)
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * len(y) * math.log(2 * math.pi)
    )


_TUNE_GRID = ((0.25, 0.5, 1.0), (0.5, 1.0, 2.0))


def gp_fit(
    observations, hyper: GPHyperparams | None = None, tune: bool = False
) -> GPModel:
    """Fit a zero-mean GP to ``(theta, r) -> deviation`` observations.

    With ``tune=True`` the length scales are grid-searched by log marginal
    likelihood; otherwise the fixed hyperparameters are used as-is.
    Duplicate configurations are only valid with a positive noise variance
    (the Gram matrix is singular otherwise, which raises ``LinAlgError``).
    """
    observations = tuple(observations)
    if not observations:
        raise ValueError("gp_fit needs at least one observation")
    hyper = hyper or GPHyperparams()
    x = np.array([[o.theta, o.r] for o in observations], dtype=float)
    y = np.array([o.deviation for o in observations], dtype=float)
    if tune:
        best = None
        for ls_theta in _TUNE_GRID[0]:
            for ls_r in _TUNE_GRID[1]:
                cand = GPHyperparams(
                    (ls_theta, ls_r), hyper.signal_variance, hyper.noise_variance
                )
                lml = _log_marginal_likelihood(x, y, cand)
                if best is None or lml > best[0]:
                    best = (lml, cand)
        hyper = best[1]
    chol, alpha = _fit(x, y, hyper)
    return GPModel(x, y, hyper, chol, alpha, observations)


def gp_predict(model: GPModel, configs):
    """Posterior mean and variance at one ``(theta, r)`` pair or an ``(m, 2)``
    batch.  Batch and pointwise evaluation agree exactly."""
    pts = np.asarray(configs, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    k_star = _kernel(model.x_train, pts, model.hyper)  # (n, m)
    mean = k_star.T @ model.alpha
    v = np.linalg.solve(model.chol, k_star)
    var = model.hyper.signal_variance - np.sum(v * v, axis=0)
    var = np.maximum(var, 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


_norm_cdf = np.vectorize(lambda z: 0.5 * (1.0 + math.erf(z / math.sqrt(2.0))))


def expected_improvement(mean, variance, best, xi: float = 0.0):
    """EI for maximization: ``E[max(f - best - xi, 0)]`` under a normal
    posterior.  Zero-variance points reduce to ``max(0, mean - best - xi)``."""
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    sigma = np.sqrt(variance)
    gain = mean - best - xi
    out = np.maximum(gain, 0.0)
    positive = sigma > 0.0
    z = np.where(positive, gain / np.where(positive, sigma, 1.0), 0.0)
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    ei = gain * _norm_cdf(z).astype(float) + sigma * pdf
    out = np.where(positive, ei, out)
    return float(out) if out.ndim == 0 else out


class AttackKind(Enum):
    NONE = "none"
    HEURISTIC = "heuristic"
    BAYES_OPT = "bayesopt"
    RANDOM_LINE = "randomline"


@dataclass(frozen=True)
class AttackPolicy:
    kind: AttackKind = AttackKind.NONE
    r_bounds: tuple[float, float] = (1.0, 3.0)
    bo_iters: int = 10
    ei_xi: float = 0.01
    gp_hyper: GPHyperparams = GPHyperparams()

    def __post_init__(self):
        lo, hi = self.r_bounds
        if not (0.0 < lo <= hi):
            raise ValueError(f"bad r_bounds {self.r_bounds}")
        if self.bo_iters < 1:
            raise ValueError("bo_iters must be >= 1")


def config_to_position(target_pos, theta: float, r: float) -> np.ndarray:
    target_pos = np.asarray(target_pos, dtype=float)
    return target_pos + r * np.array([math.cos(theta), math.sin(theta)])


def bayes_opt_attack(
    model: GPModel | None,
    policy: AttackPolicy,
    probe,
    rng: np.random.Generator,
) -> tuple[tuple[float, float], GPModel]:
    """Expected-improvement search for the attack configuration that maximizes
    the probed deviation.

    Each iteration scores 512 uniformly sampled candidates (plus the incumbent
    best) under the surrogate, probes the best-scoring one with
    ``probe(theta, r) -> deviation``, and refits.  Returns the configuration
    with the highest observed deviation together with the augmented model, so
    the surrogate can persist across calls.  Deterministic given ``rng``.
    """
    observations = list(model.observations) if model is not None else []
    hyper = policy.gp_hyper
    lo, hi = policy.r_bounds
    for _ in range(policy.bo_iters):
        thetas = rng.uniform(-math.pi, math.pi, _CANDIDATES_PER_ITER)
        rs = rng.uniform(lo, hi, _CANDIDATES_PER_ITER)
        candidates = np.column_stack([thetas, rs])
        if observations:
            incumbent = max(observations, key=lambda o: o.deviation)
            candidates = np.vstack([candidates, [incumbent.theta, incumbent.r]])
        if model is not None:
            mean, var = gp_predict(model, candidates)
            best = max(o.deviation for o in observations)
            scores = expected_improvement(mean, var, best, policy.ei_xi)
        else:
            scores = np.zeros(len(candidates))  # flat prior: ties
        pick = candidates[int(np.argmax(scores))]
        theta, r = float(pick[0]), float(pick[1])
        deviation = float(probe(theta, r))
        observations.append(Observation(theta, r, deviation))
        model = gp_fit(observations, hyper)
    best_obs = max(observations, key=lambda o: o.deviation)
    return (best_obs.theta, best_obs.r), model


def heuristic_attack(
    theta_r: float, dtheta_dt: float, delta_t: float, policy: AttackPolicy
) -> tuple[float, float]:
    """Closed-form attack: lead the target's heading by half its (clamped)
    turn rate over one step, at the middle of the radius range."""
    turn = min(max(dtheta_dt, -HEURISTIC_TURN_CLAMP), HEURISTIC_TURN_CLAMP)
    theta_a = theta_r + HEURISTIC_LEAD_FACTOR * delta_t * turn
    r = 0.5 * (policy.r_bounds[0] + policy.r_bounds[1])
    return theta_a, r


def adversary_step(
    current,
    attack_target,
    v_max: float,
    dt: float,
    env_map: EnvironmentMap,
    margin: float = 0.8,
) -> np.ndarray:
    """Advance the adversary at most ``v_max * dt`` toward ``attack_target``,
    push it out of obstacles within ``margin``, and clamp to the map bounds."""
    current = np.asarray(current, dtype=float)
    target = np.asarray(attack_target, dtype=float)
    offset = target - current
    dist = float(np.linalg.norm(offset))
    max_move = v_max * dt
    if dist > max_move and dist > 0.0:
        pos = current + offset * (max_move / dist)
    else:
        pos = target.copy()
    repulsion = np.zeros(2)
    for obs in env_map.obstacles:
        diff = pos - obs.center
        norm = float(np.linalg.norm(diff))
        d = norm - obs.radius
        if d < margin and norm > 0.0:
            repulsion += (margin - d) * (diff / norm)
    pos = pos + repulsion
    return env_map.bounds.clamp(pos)


def observations_to_csv(observations, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "r", "deviation"])
        for o in observations:
            writer.writerow([repr(o.theta), repr(o.r), repr(o.deviation)])
