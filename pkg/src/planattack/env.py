"""2D worlds made of circular obstacles, with exact signed-distance queries
and seeded random map generation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Distance reported for queries against an empty map.
SENTINEL_DISTANCE = 1e9

# Canonical world used by the simulation harness: a 20 m x 20 m box with a
# straight corridor between two opposite edges.
DEFAULT_START = (-9.0, 0.0)
DEFAULT_GOAL = (9.0, 0.0)

_MAX_SAMPLING_ATTEMPTS = 10_000


class MapGenerationError(RuntimeError):
    """Raised when rejection sampling cannot place the requested obstacles."""


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned rectangle ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate bounds {self}")

    def contains(self, point) -> bool:
        x, y = float(point[0]), float(point[1])
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def clamp(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        return np.array(
            [min(max(p[0], self.xmin), self.xmax), min(max(p[1], self.ymin), self.ymax)]
        )

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array(
            [rng.uniform(self.xmin, self.xmax), rng.uniform(self.ymin, self.ymax)]
        )


WORLD_BOUNDS = Bounds(-10.0, -10.0, 10.0, 10.0)


@dataclass(frozen=True, eq=False)
class Obstacle:
    """A filled disc."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        if not np.all(np.isfinite(center)):
            raise ValueError("obstacle center must be finite")
        if not (np.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")


@dataclass(frozen=True, eq=False)
class EnvironmentMap:
    """Immutable collection of circular obstacles inside a bounding box.

    ``adversary_index`` marks one obstacle as a moving agent rather than part
    of the static world; distance queries can exclude it.
    """

    obstacles: tuple[Obstacle, ...]
    bounds: Bounds = WORLD_BOUNDS
    adversary_index: int | None = None

    def __post_init__(self):
        obstacles = tuple(self.obstacles)
        object.__setattr__(self, "obstacles", obstacles)
        for obs in obstacles:
            if not self.bounds.contains(obs.center):
                raise ValueError(f"obstacle center {obs.center} outside {self.bounds}")
        if self.adversary_index is not None and not (
            0 <= self.adversary_index < len(obstacles)
        ):
            raise ValueError("adversary_index out of range")
        if obstacles:
            centers = np.array([o.center for o in obstacles])
            radii = np.array([o.radius for o in obstacles])
        else:
            centers = np.zeros((0, 2))
            radii = np.zeros(0)
        object.__setattr__(self, "_centers", centers)
        object.__setattr__(self, "_radii", radii)

    def signed_distance(self, point) -> tuple[float, np.ndarray]:
        """Distance from ``point`` to the nearest obstacle surface (negative
        inside) and the unit gradient pointing away from that obstacle's
        center.  Ties go to the lowest obstacle index; an empty map reports
        the sentinel distance with a zero gradient."""
        if not self.obstacles:
            return SENTINEL_DISTANCE, np.zeros(2)
        p = np.asarray(point, dtype=float)
        diff = p - self._centers
        norms = np.hypot(diff[:, 0], diff[:, 1])
        dists = norms - self._radii
        i = int(np.argmin(dists))
        if norms[i] > 0.0:
            grad = diff[i] / norms[i]
        else:
            grad = np.zeros(2)
        return float(dists[i]), grad

    def signed_distance_batch(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`signed_distance` over an ``(m, 2)`` array."""
        pts = np.asarray(points, dtype=float)
        if not self.obstacles:
            return (
                np.full(len(pts), SENTINEL_DISTANCE),
                np.zeros_like(pts),
            )
        diff = pts[:, None, :] - self._centers[None, :, :]
        norms = np.sqrt(np.sum(diff * diff, axis=2))
        dists = norms - self._radii[None, :]
        idx = np.argmin(dists, axis=1)
        rows = np.arange(len(pts))
        nearest = norms[rows, idx]
        grads = np.zeros_like(pts)
        ok = nearest > 0.0
        grads[ok] = diff[rows[ok], idx[ok]] / nearest[ok, None]
        return dists[rows, idx], grads

    def min_separation(self, point, exclude: int | None = None) -> float:
        """Smallest surface distance from ``point`` over all obstacles except
        ``exclude``; sentinel when no obstacle remains."""
        if not self.obstacles:
            return SENTINEL_DISTANCE
        p = np.asarray(point, dtype=float)
        diff = p - self._centers
        dists = np.hypot(diff[:, 0], diff[:, 1]) - self._radii
        if exclude is not None:
            dists = np.delete(dists, exclude)
            if dists.size == 0:
                return SENTINEL_DISTANCE
        return float(dists.min())

    def static_obstacles(self) -> "EnvironmentMap":
        """The map with the adversary obstacle (if any) removed."""
        if self.adversary_index is None:
            return self
        kept = tuple(
            o for i, o in enumerate(self.obstacles) if i != self.adversary_index
        )
        return EnvironmentMap(kept, self.bounds)

    def with_adversary(self, position, radius: float) -> "EnvironmentMap":
        """A copy of the map with a marked adversary disc appended."""
        pos = self.bounds.clamp(position)
        obstacles = self.obstacles + (Obstacle(pos, radius),)
        return EnvironmentMap(obstacles, self.bounds, adversary_index=len(obstacles) - 1)

    def with_obstacle(self, obstacle: Obstacle) -> "EnvironmentMap":
        obstacles = self.obstacles + (obstacle,)
        return EnvironmentMap(obstacles, self.bounds, self.adversary_index)


class MapKind(Enum):
    SPARSE = "sparse"
    DENSE = "dense"


_KIND_DEFAULTS = {
    MapKind.SPARSE: (4, (0.5, 0.8)),
    MapKind.DENSE: (30, (0.25, 0.45)),
}


@dataclass(frozen=True)
class MapSpec:
    """Recipe for a random map; ``generate_map`` is a pure function of it."""

    kind: MapKind = MapKind.SPARSE
    obstacle_count: int | None = None
    radius_range: tuple[float, float] | None = None
    seed: int = 0

    def resolved(self) -> tuple[int, tuple[float, float]]:
        count, radii = _KIND_DEFAULTS[self.kind]
        if self.obstacle_count is not None:
            count = int(self.obstacle_count)
        if self.radius_range is not None:
            radii = (float(self.radius_range[0]), float(self.radius_range[1]))
        if count < 0:
            raise ValueError("obstacle_count must be non-negative")
        if not (0.0 < radii[0] <= radii[1]):
            raise ValueError(f"bad radius_range {radii}")
        return count, radii


def generate_map(
    spec: MapSpec,
    bounds: Bounds = WORLD_BOUNDS,
    start=DEFAULT_START,
    goal=DEFAULT_GOAL,
) -> EnvironmentMap:
    """Rejection-sample ``spec.obstacle_count`` discs inside ``bounds``.

    Every disc keeps a clearance of at least twice the maximum radius from
    the corridor endpoints so the planning problem always has free space
    around start and goal.  Deterministic in ``spec.seed``.
    """
    count, (r_lo, r_hi) = spec.resolved()
    rng = np.random.default_rng(spec.seed)
    endpoints = np.array([start, goal], dtype=float)
    clearance = 2.0 * r_hi
    obstacles = []
    attempts = 0
    while len(obstacles) < count:
        attempts += 1
        if attempts > _MAX_SAMPLING_ATTEMPTS:
            raise MapGenerationError(
                f"could not place {count} obstacles after {_MAX_SAMPLING_ATTEMPTS} attempts"
            )
        center = bounds.sample(rng)
        radius = rng.uniform(r_lo, r_hi)
        gap = np.hypot(*(endpoints - center).T) - radius
        if np.min(gap) < clearance:
            continue
        obstacles.append(Obstacle(center, radius))
    return EnvironmentMap(tuple(obstacles), bounds)


def map_to_text(env_map: EnvironmentMap) -> str:
    """Serialize as a ``bounds`` header line plus one ``cx cy r`` line per
    obstacle."""
    b = env_map.bounds
    # float() strips numpy scalar wrappers so repr stays parseable; Python's
    # shortest-repr guarantees the round trip is exact.
    lines = [
        "bounds "
        f"{float(b.xmin)!r} {float(b.ymin)!r} {float(b.xmax)!r} {float(b.ymax)!r}"
    ]
    for obs in env_map.obstacles:
        cx, cy = (float(v) for v in obs.center)
        lines.append(f"{cx!r} {cy!r} {float(obs.radius)!r}")
    return "\n".join(lines) + "\n"


def map_from_text(text: str) -> EnvironmentMap:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("bounds "):
        raise ValueError("map text must begin with a 'bounds' header")
    header = lines[0].split()
    if len(header) != 5:
        raise ValueError(f"malformed bounds header: {lines[0]!r}")
    bounds = Bounds(*(float(v) for v in header[1:]))
    obstacles = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"malformed obstacle line: {ln!r}")
        cx, cy, r = (float(v) for v in parts)
        obstacles.append(Obstacle((cx, cy), r))
    return EnvironmentMap(tuple(obstacles), bounds)
