"""Six-penalty chromosome cost.

The standalone penalty functions are the reference definitions.
:class:`CostModel` is the cached evaluator used inside the GA; it reuses
per-segment work across chromosomes but produces bit-identical totals
(per-pose repeat values are summed with ``math.fsum`` in both paths).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .footprint import DisinfectionFootprint
from .genetic import Chromosome, Lattice, direction_index, neighbours
from .kernels import FREE
from .mapping import KnownMaps
from .world import HEADING_STEP, Pose, cell_index

PENALTY_NAMES = ("collision", "human_closeness", "visited", "neighbour", "turn", "repeat_disinfection")


@dataclass(frozen=True)
class CostWeights:
    collision: float = 100.0
    human: float = 90.0
    visited: float = 10.0
    neighbour: float = 8.0
    turn: float = 5.0
    repeat: float = 3.0

    def __post_init__(self):
        w = self.as_tuple()
        if any(a < b for a, b in zip(w, w[1:])) or w[-1] < 0:
            raise ValueError("weights must be non-negative and in descending order")
        if w[0] <= 0:
            raise ValueError("collision weight must be positive")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.collision, self.human, self.visited, self.neighbour, self.turn, self.repeat)

    def scaled(self, k: float) -> "CostWeights":
        return CostWeights(*(k * w for w in self.as_tuple()))

    @classmethod
    def from_config(cls, cfg: dict | None) -> "CostWeights":
        cfg = cfg or {}
        d = cls()
        return cls(
            cfg.get("w_collision", d.collision),
            cfg.get("w_human", d.human),
            cfg.get("w_visited", d.visited),
            cfg.get("w_neighbour", d.neighbour),
            cfg.get("w_turn", d.turn),
            cfg.get("w_repeat", d.repeat),
        )


@dataclass(frozen=True)
class CostBreakdown:
    penalties: tuple[float, float, float, float, float, float]
    total: float

    def as_dict(self) -> dict:
        out = dict(zip(PENALTY_NAMES, self.penalties))
        out["total"] = self.total
        return out


def combine(weights: CostWeights, penalties) -> CostBreakdown:
    penalties = tuple(float(p) for p in penalties)
    total = 0.0
    for w, p in zip(weights.as_tuple(), penalties):
        total += w * p
    return CostBreakdown(penalties, total)


# --------------------------------------------------------------------------
# Interpolation
# --------------------------------------------------------------------------


def segment_samples(length: float, step: float) -> int:
    """Number of sub-steps so that spacing is <= step."""
    return max(1, math.ceil(length / step - 1e-9))


def interpolate(c: Chromosome, lattice: Lattice, step: float, start_heading: float = 0.0) -> list[Pose]:
    """Poses along the chromosome at spacing <= step; shared waypoints appear once.

    Each pose carries the heading of the segment it lies on (a waypoint takes
    the heading of its incoming segment); the first pose takes the first
    segment's heading, or ``start_heading`` for a single-point chromosome.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x0, y0 = lattice.to_world(c[0])
    if len(c) == 1:
        return [Pose(x0, y0, start_heading)]
    poses = [Pose(x0, y0, direction_index(c[0], c[1]) * HEADING_STEP)]
    for a, b in zip(c, c[1:]):
        poses.extend(_segment_poses(a, b, lattice, step))
    return poses


def _segment_poses(a, b, lattice: Lattice, step: float) -> list[Pose]:
    ax, ay = lattice.to_world(a)
    bx, by = lattice.to_world(b)
    heading = direction_index(a, b) * HEADING_STEP
    n = segment_samples(math.hypot(bx - ax, by - ay), step)
    return [Pose(ax + (bx - ax) * j / n, ay + (by - ay) * j / n, heading) for j in range(1, n + 1)]


# --------------------------------------------------------------------------
# Penalties
# --------------------------------------------------------------------------


def collision_penalty(poses, cspace: np.ndarray, resolution_m: float) -> float:
    nx, ny = cspace.shape
    for p in poses:
        ix, iy = cell_index(p.x, p.y, resolution_m)
        if not (0 <= ix < nx and 0 <= iy < ny) or cspace[ix, iy]:
            return 1.0
    return 0.0


def personal_cost(d: float, sigma: float) -> float:
    """Gaussian personal-space cost ``exp(-d^2 / (2 sigma))``; sigma has units of m^2."""
    return math.exp(-(d * d) / (2.0 * sigma))


def human_closeness_penalty(c: Chromosome, lattice: Lattice, human_points: np.ndarray) -> float:
    """Max personal cost over (waypoint, sensed human point) pairs. ``human_points`` rows are (x, y, sigma)."""
    if len(human_points) == 0:
        return 0.0
    best = 0.0
    for p in c:
        x, y = lattice.to_world(p)
        d2 = (human_points[:, 0] - x) ** 2 + (human_points[:, 1] - y) ** 2
        best = max(best, float(np.exp(-d2 / (2.0 * human_points[:, 2])).max()))
    return best


def visited_penalty(c: Chromosome, visited) -> float:
    if len(c) < 2:
        return 0.0
    return sum(1 for p in c[1:] if p in visited) / (len(c) - 1)


def neighbour_penalty(c: Chromosome, visited, mode: str = "absence") -> float:
    """Visited-neighbour penalty.

    ``absence``: fraction of waypoints with no visited 8-neighbour, zero while
    nothing has been visited yet. ``presence``: fraction of the 8 * len(c)
    neighbour slots that are already visited (the per-neighbour increment form).
    """
    if not visited:
        return 0.0
    if mode == "presence":
        hits = sum(1 for p in c for n in neighbours(p) if n in visited)
        return hits / (8 * len(c))
    lonely = sum(1 for p in c if not any(n in visited for n in neighbours(p)))
    return lonely / len(c)


_TURN_LITERAL = {0: 0.0, 1: 1.0, 2: 0.5, 3: 1.0, 4: 1.0}
_TURN_MONOTONE = {0: 0.0, 1: 0.5, 2: 1.0, 3: 1.0, 4: 1.0}


def turn_steps(a: int, b: int) -> int:
    """Absolute heading change between direction indices, in 45-degree steps (0..4)."""
    d = abs(a - b) % 8
    return min(d, 8 - d)


def turn_penalty(c: Chromosome, monotone: bool = False) -> float:
    """Bracketed heading change at each interior waypoint, averaged over the len(c) - 2 interior points."""
    if len(c) < 3:
        return 0.0
    table = _TURN_MONOTONE if monotone else _TURN_LITERAL
    dirs = [direction_index(a, b) for a, b in zip(c, c[1:])]
    total = sum(table[turn_steps(a, b)] for a, b in zip(dirs, dirs[1:]))
    return total / (len(c) - 2)


def _point_overlap(flagged: int, free_cells: int) -> float:
    # a mask with no disinfectable cells has nothing left to gain
    return flagged / free_cells if free_cells else 1.0


def repeat_disinfection_penalty(
    poses, disinfected: np.ndarray, free: np.ndarray, footprint: DisinfectionFootprint, resolution_m: float
) -> float:
    """Mean over poses of (already disinfected mask cells) / (Free mask cells)."""
    vals = []
    nx, ny = free.shape
    for p in poses:
        ci, cj = cell_index(p.x, p.y, resolution_m)
        di, dj = footprint.mask(p.heading, resolution_m)
        jx, jy = ci + di, cj + dj
        ok = (jx >= 0) & (jy >= 0) & (jx < nx) & (jy < ny)
        jx, jy = jx[ok], jy[ok]
        f = free[jx, jy]
        vals.append(_point_overlap(int((disinfected[jx, jy] & f).sum()), int(f.sum())))
    return math.fsum(vals) / len(vals)


def evaluate(
    c: Chromosome,
    state: KnownMaps,
    weights: CostWeights,
    footprint: DisinfectionFootprint,
    step: float,
    lattice: Lattice,
    start_heading: float = 0.0,
    turn_monotone: bool = False,
    neighbour_mode: str = "absence",
) -> CostBreakdown:
    """Reference (uncached) cost of one chromosome against a map snapshot."""
    poses = interpolate(c, lattice, step, start_heading)
    free = state.known == FREE
    penalties = (
        collision_penalty(poses, state.cspace, state.resolution_m),
        human_closeness_penalty(c, lattice, state.human_array()),
        visited_penalty(c, state.visited),
        neighbour_penalty(c, state.visited, neighbour_mode),
        turn_penalty(c, turn_monotone),
        repeat_disinfection_penalty(poses, state.disinfected, free, footprint, state.resolution_m),
    )
    return combine(weights, penalties)


class CostModel:
    """Memoizing evaluator bound to one frozen snapshot; calling it returns the scalar total."""

    def __init__(
        self,
        state: KnownMaps,
        weights: CostWeights,
        footprint: DisinfectionFootprint,
        step: float,
        lattice: Lattice,
        start_heading: float = 0.0,
        turn_monotone: bool = False,
        neighbour_mode: str = "absence",
    ):
        self.state = state
        self.neighbour_mode = neighbour_mode
        self.weights = weights
        self.footprint = footprint
        self.step = step
        self.lattice = lattice
        self.start_heading = start_heading
        self.turn_monotone = turn_monotone
        self.res = state.resolution_m
        self.free = np.ascontiguousarray(state.known == FREE)
        self.flagged = np.ascontiguousarray(state.disinfected & self.free)
        self.humans = state.human_array()
        self._segments: dict = {}
        self._anchors: dict = {}
        self._cache: dict = {}

    def _pose_values(self, poses) -> tuple[bool, np.ndarray]:
        nx, ny = self.free.shape
        blocked = False
        cells = [cell_index(p.x, p.y, self.res) for p in poses]
        for ix, iy in cells:
            if not (0 <= ix < nx and 0 <= iy < ny) or self.state.cspace[ix, iy]:
                blocked = True
                break
        vals = np.empty(len(poses))
        # all poses of one segment share a heading
        di, dj = self.footprint.mask(poses[0].heading, self.res)
        ci = np.array([c[0] for c in cells], dtype=np.int64)
        cj = np.array([c[1] for c in cells], dtype=np.int64)
        flagged = kernels.mask_sum(self.flagged, ci, cj, di, dj)
        free = kernels.mask_sum(self.free, ci, cj, di, dj)
        for k in range(len(poses)):
            vals[k] = _point_overlap(int(flagged[k]), int(free[k]))
        return blocked, vals

    def _segment(self, a, b):
        key = (a, b)
        hit = self._segments.get(key)
        if hit is None:
            hit = self._pose_values(_segment_poses(a, b, self.lattice, self.step))
            self._segments[key] = hit
        return hit

    def _anchor(self, p, heading):
        key = (p, heading)
        hit = self._anchors.get(key)
        if hit is None:
            x, y = self.lattice.to_world(p)
            hit = self._pose_values([Pose(x, y, heading)])
            self._anchors[key] = hit
        return hit

    def evaluate(self, c: Chromosome) -> CostBreakdown:
        hit = self._cache.get(c)
        if hit is not None:
            return hit
        if len(c) == 1:
            head = self.start_heading
        else:
            head = direction_index(c[0], c[1]) * HEADING_STEP
        blocked, first = self._anchor(c[0], Pose(0, 0, head).heading)
        parts = [first]
        for a, b in zip(c, c[1:]):
            seg_blocked, vals = self._segment(a, b)
            blocked = blocked or seg_blocked
            parts.append(vals)
        allv = np.concatenate(parts)
        visited = self.state.visited
        penalties = (
            1.0 if blocked else 0.0,
            human_closeness_penalty(c, self.lattice, self.humans),
            visited_penalty(c, visited),
            neighbour_penalty(c, visited, self.neighbour_mode),
            turn_penalty(c, self.turn_monotone),
            math.fsum(allv.tolist()) / len(allv),
        )
        out = combine(self.weights, penalties)
        self._cache[c] = out
        return out

    def __call__(self, c: Chromosome) -> float:
        return self.evaluate(c).total
