"""Command-line front end: single trials, seeded batches, obstacle sweeps,
the attack-proximity experiment, and GP training-data dumps.

Exit codes: 0 on success, 1 for configuration errors, 2 for I/O errors, 3 for
internal numerical errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adversary import AttackKind, observations_to_csv
from .config import ConfigError, load_config
from .diagnostics import obstacle_sweep, sweep_to_csv
from .env import DEFAULT_GOAL, DEFAULT_START, EnvironmentMap, MapGenerationError, WORLD_BOUNDS
from .harness import (
    WEIGHT_PRESETS,
    proximity_experiment,
    run_batch,
    run_trial,
    run_trial_with_gp,
    write_batch_csv,
    write_proximity_csv,
    write_step_csv,
    write_trials_csv,
)
from .planner import CostModel

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planattack",
        description="Trajectory-planner attack simulations and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", required=True, help="output directory for CSV files")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_trial = sub.add_parser("trial", help="run one trial and write its per-step log")
    add_common(p_trial)

    p_batch = sub.add_parser("batch", help="run seeded trials and write summary stats")
    add_common(p_batch)
    p_batch.add_argument("--trials", type=int, default=100)

    p_sweep = sub.add_parser("sweep", help="single-obstacle position sweep on the corridor")
    add_common(p_sweep)
    p_sweep.add_argument("--grid", type=int, default=40)
    p_sweep.add_argument("--radius", type=float, default=1.0, help="swept obstacle radius")

    p_prox = sub.add_parser("proximity", help="iteration stats vs pinned attack radius")
    add_common(p_prox)
    p_prox.add_argument("--radii", default="2,4,6", help="comma-separated radii in meters")
    p_prox.add_argument("--trials", type=int, default=10)

    p_gp = sub.add_parser("gp-dump", help="run one attack trial and dump GP observations")
    add_common(p_gp)
    return parser


def _load(args):
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_trial(args) -> int:
    config = _load(args)
    record = run_trial(config)
    write_step_csv(record, _outdir(args) / "trial.csv")
    print(f"outcome={record.outcome.value} steps={record.steps}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    config = _load(args)
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    summary, records = run_batch(config, args.trials)
    out = _outdir(args)
    write_batch_csv([summary], out / "batch.csv")
    write_trials_csv(records, out / "trials.csv")
    print(
        f"n={summary.n_trials} success={summary.success_rate:.3f} "
        f"collm={summary.collm_rate:.3f} colla={summary.colla_rate:.3f} "
        f"timeout={summary.timeout_rate:.3f}"
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args)
    if args.grid < 1:
        raise ConfigError("--grid must be >= 1")
    base = CostModel(WEIGHT_PRESETS[config.weights], EnvironmentMap((), WORLD_BOUNDS))
    cells = obstacle_sweep(
        base,
        DEFAULT_START,
        DEFAULT_GOAL,
        config.num_waypoints,
        args.grid,
        config.solver,
        obstacle_radius=args.radius,
        dt=config.traj_dt,
    )
    sweep_to_csv(cells, _outdir(args) / "sweep.csv")
    failures = sum(1 for c in cells if c.outcome.value == "failure")
    print(f"cells={len(cells)} failures={failures}")
    return EXIT_OK


def _cmd_proximity(args) -> int:
    config = _load(args)
    try:
        radii = [float(v) for v in args.radii.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"could not parse --radii {args.radii!r}") from None
    if not radii or any(r <= 0 for r in radii):
        raise ConfigError("--radii must be positive numbers")
    if config.policy.kind is AttackKind.NONE:
        raise ConfigError("proximity requires an attacking policy")
    results = proximity_experiment(config, radii, args.trials)
    write_proximity_csv(results, _outdir(args) / "proximity.csv")
    for radius, summary in results:
        print(f"radius={radius} mean_max_iters={summary.mean_max_iters:.2f}")
    return EXIT_OK


def _cmd_gp_dump(args) -> int:
    config = _load(args)
    if config.policy.kind is not AttackKind.BAYES_OPT:
        raise ConfigError("gp-dump requires policy = bayesopt")
    record, model = run_trial_with_gp(config)
    observations = model.observations if model is not None else ()
    observations_to_csv(observations, _outdir(args) / "gp_data.csv")
    print(f"outcome={record.outcome.value} observations={len(observations)}")
    return EXIT_OK


_COMMANDS = {
    "trial": _cmd_trial,
    "batch": _cmd_batch,
    "sweep": _cmd_sweep,
    "proximity": _cmd_proximity,
    "gp-dump": _cmd_gp_dump,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MapGenerationError, np.linalg.LinAlgError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
