"""Flat ``key = value`` configuration files for the command-line tools.

Keys mirror the trial, solver, map and policy settings; unknown keys are hard
errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import replace

from .adversary import AttackKind, AttackPolicy
from .env import MapKind, MapSpec
from .harness import TrialConfig, WeightsPreset
from .solver import Method


class ConfigError(ValueError):
    """Malformed configuration text or values."""


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_enum(enum_cls):
    def parse(raw: str):
        try:
            return enum_cls(raw.lower())
        except ValueError:
            options = ", ".join(e.value for e in enum_cls)
            raise ConfigError(f"expected one of ({options}), got {raw!r}") from None

    return parse


def _parse_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}") from None


def _parse_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}") from None


# key -> (section, field, parser).  Sections name the nested config the field
# belongs to; pair keys (radius/r bounds) are post-processed.
_KEYS = {
    "map_kind": ("map", "kind", _parse_enum(MapKind)),
    "obstacle_count": ("map", "obstacle_count", _parse_int),
    "radius_min": ("map", "radius_min", _parse_float),
    "radius_max": ("map", "radius_max", _parse_float),
    "map_seed": ("map", "seed", _parse_int),
    "method": ("solver", "method", _parse_enum(Method)),
    "max_iters": ("solver", "max_iters", _parse_int),
    "grad_tol": ("solver", "grad_tol", _parse_float),
    "lbfgs_memory": ("solver", "lbfgs_memory", _parse_int),
    "armijo_c": ("solver", "armijo_c", _parse_float),
    "backtrack_factor": ("solver", "backtrack_factor", _parse_float),
    "policy": ("policy", "kind", _parse_enum(AttackKind)),
    "r_min": ("policy", "r_min", _parse_float),
    "r_max": ("policy", "r_max", _parse_float),
    "bo_iters": ("policy", "bo_iters", _parse_int),
    "ei_xi": ("policy", "ei_xi", _parse_float),
    "weights": ("trial", "weights", _parse_enum(WeightsPreset)),
    "seed": ("trial", "seed", _parse_int),
    "target_speed": ("trial", "target_speed", _parse_float),
    "adversary_vmax": ("trial", "adversary_vmax", _parse_float),
    "safety_radius": ("trial", "safety_radius", _parse_float),
    "ignore_safety_radius": ("trial", "ignore_safety_radius", _parse_bool),
    "max_steps": ("trial", "max_steps", _parse_int),
    "sim_dt": ("trial", "sim_dt", _parse_float),
    "goal_radius": ("trial", "goal_radius", _parse_float),
    "adversary_radius": ("trial", "adversary_radius", _parse_float),
    "num_waypoints": ("trial", "num_waypoints", _parse_int),
    "spawn_band": ("trial", "spawn_band", _parse_float),
    "log_kappa": ("trial", "log_kappa", _parse_bool),
}


def parse_config_text(text: str) -> TrialConfig:
    """Build a :class:`TrialConfig` from flat ``key = value`` lines.

    Blank lines and ``#`` comments are ignored.  Unknown keys, repeated keys
    and unparsable values raise :class:`ConfigError`.
    """
    sections: dict[str, dict] = {"map": {}, "solver": {}, "policy": {}, "trial": {}}
    seen = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        section, field_name, parser = _KEYS[key]
        sections[section][field_name] = parser(raw_value)

    map_kw = sections["map"]
    r_lo = map_kw.pop("radius_min", None)
    r_hi = map_kw.pop("radius_max", None)
    if (r_lo is None) != (r_hi is None):
        raise ConfigError("radius_min and radius_max must be given together")
    if r_lo is not None:
        map_kw["radius_range"] = (r_lo, r_hi)
    policy_kw = sections["policy"]
    p_lo = policy_kw.pop("r_min", None)
    p_hi = policy_kw.pop("r_max", None)
    if (p_lo is None) != (p_hi is None):
        raise ConfigError("r_min and r_max must be given together")
    if p_lo is not None:
        policy_kw["r_bounds"] = (p_lo, p_hi)

    try:
        # Solver keys override the trial defaults (which are tuned for
        # replanning) rather than the raw SolverConfig defaults.
        base = TrialConfig()
        map_spec = replace(MapSpec(), **map_kw)
        solver = replace(base.solver, **sections["solver"])
        policy = replace(AttackPolicy(), **policy_kw)
        config = TrialConfig(
            map_spec=map_spec, solver=solver, policy=policy, **sections["trial"]
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def load_config(path) -> TrialConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())
