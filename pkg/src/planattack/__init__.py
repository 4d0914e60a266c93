"""Gradient-based 2D trajectory planning and black-box attacks against
replanning targets."""

from .adversary import (
    AttackKind,
    AttackPolicy,
    GPHyperparams,
    GPModel,
    Observation,
    adversary_step,
    bayes_opt_attack,
    deviation_angle,
    expected_improvement,
    gp_fit,
    gp_predict,
    heuristic_attack,
)
from .diagnostics import (
    SpectralReport,
    SweepCell,
    SweepOutcome,
    condition_number,
    eigen_symmetric,
    obstacle_sweep,
)
from .env import (
    Bounds,
    EnvironmentMap,
    MapGenerationError,
    MapKind,
    MapSpec,
    Obstacle,
    SENTINEL_DISTANCE,
    generate_map,
)
from .harness import (
    BatchSummary,
    StepStats,
    TrialConfig,
    TrialOutcome,
    TrialRecord,
    WeightsPreset,
    proximity_experiment,
    run_batch,
    run_trial,
)
from .planner import (
    CostModel,
    CostWeights,
    Trajectory,
    collision_cost,
    smoothness_cost,
    straight_line_init,
)
from .solver import (
    Method,
    SolverConfig,
    SolverReport,
    bfgs_inverse_hessian,
    minimize,
    minimize_objective,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
