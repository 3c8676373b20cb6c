"""The robot's incrementally discovered maps: occupancy, C-space, visited lattice points, disinfection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .footprint import DisinfectionFootprint
from .kernels import FREE, OCCUPIED, UNKNOWN
from .world import Pose, WorldModel, cell_index


@dataclass(frozen=True)
class SensorParams:
    max_range_m: float = 8.0
    angular_step_deg: float = 0.5
    detection_range_m: float = 4.0

    @property
    def bearings(self) -> np.ndarray:
        n = int(round(360.0 / self.angular_step_deg))
        return np.arange(n) * (2.0 * math.pi / n)


@dataclass
class KnownMaps:
    """Mutable robot knowledge. Only the mission executor mutates it; planners get :meth:`snapshot` copies."""

    resolution_m: float
    inflation_radius_m: float
    known: np.ndarray
    cspace: np.ndarray  # True = Blocked
    disinfected: np.ndarray
    visited: set = field(default_factory=set)
    human_points: dict = field(default_factory=dict)  # human id -> (K, 2) array
    human_sigmas: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, shape: tuple[int, int], resolution_m: float, inflation_radius_m: float = 0.30):
        known = np.full(shape, UNKNOWN, dtype=np.uint8)
        return cls(
            resolution_m,
            inflation_radius_m,
            known,
            inflate(known, inflation_radius_m, resolution_m),
            np.zeros(shape, dtype=bool),
        )

    @property
    def free(self) -> np.ndarray:
        return self.known == FREE

    def snapshot(self) -> "KnownMaps":
        """Deep, read-only copy for the planners."""
        arrays = [a.copy() for a in (self.known, self.cspace, self.disinfected)]
        for a in arrays:
            a.setflags(write=False)
        return KnownMaps(
            self.resolution_m,
            self.inflation_radius_m,
            *arrays,
            visited=frozenset(self.visited),
            human_points={k: v.copy() for k, v in self.human_points.items()},
            human_sigmas=dict(self.human_sigmas),
        )

    def human_array(self) -> np.ndarray:
        """(K, 3) array of sensed (x, y, sigma) rows, ordered by human id."""
        rows = [
            np.column_stack([pts, np.full(len(pts), self.human_sigmas[hid])])
            for hid, pts in sorted(self.human_points.items())
            if len(pts)
        ]
        return np.vstack(rows) if rows else np.zeros((0, 3))

    def is_blocked(self, x: float, y: float) -> bool:
        ix, iy = cell_index(x, y, self.resolution_m)
        nx, ny = self.cspace.shape
        if not (0 <= ix < nx and 0 <= iy < ny):
            return True
        return bool(self.cspace[ix, iy])

    def unknown_count(self) -> int:
        return int((self.known == UNKNOWN).sum())

    def disinfected_count(self) -> int:
        return int(self.disinfected.sum())


def inflate(known: np.ndarray, inflation_radius_m: float, resolution_m: float) -> np.ndarray:
    """C-space: a cell is Blocked iff an Occupied or Unknown cell center lies within the radius."""
    if inflation_radius_m < 0:
        raise ValueError("inflation radius must be >= 0")
    source = np.ascontiguousarray(known != FREE)
    di, dj = kernels.disc_offsets(inflation_radius_m, resolution_m)
    return kernels.inflate_disc(source, di, dj)


def sense_and_update(maps: KnownMaps, world: WorldModel, pose: Pose, sensor: SensorParams) -> KnownMaps:
    """Ray-cast a full revolution from ``pose``, reveal cells, re-inflate, refresh sensed humans."""
    # traversed cells are truly free and hit cells truly solid, so no cell ever flips back
    kernels.sweep_rays(world.solid, maps.known, world.resolution_m, pose.x, pose.y, sensor.bearings, sensor.max_range_m)
    maps.cspace = inflate(maps.known, maps.inflation_radius_m, maps.resolution_m)
    for hid, human in enumerate(world.humans):
        seen = _visible_points(world, pose, human.sample_points, sensor.detection_range_m)
        if seen:
            maps.human_points[hid] = np.array(seen, dtype=float)
            maps.human_sigmas[hid] = human.sigma
    return maps


def _visible_points(world: WorldModel, pose: Pose, points, detection_range: float):
    res = world.resolution_m
    out = []
    for px, py in points:
        d = math.hypot(px - pose.x, py - pose.y)
        if d > detection_range or d == 0.0:
            continue
        bearing = math.atan2(py - pose.y, px - pose.x)
        hit, _, _ = kernels.cast_ray(world.solid, res, pose.x, pose.y, bearing, d + 2 * res)
        # the ray must reach the body boundary before anything else stops it
        if hit >= d - 2 * res:
            out.append((px, py))
    return out


def mark_visited(maps: KnownMaps, points) -> KnownMaps:
    for p in points:
        maps.visited.add(tuple(p))
    return maps


def stamp_disinfection(
    maps: KnownMaps, pose: Pose, footprint: DisinfectionFootprint, lamps_on: bool
) -> int:
    """Flag Free cells under the footprint at ``pose``; returns the number of newly flagged cells."""
    if not lamps_on:
        return 0
    di, dj = footprint.mask(pose.heading, maps.resolution_m)
    ci, cj = cell_index(pose.x, pose.y, maps.resolution_m)
    free = np.ascontiguousarray(maps.known == FREE)
    return int(kernels.stamp(maps.disinfected, free, ci, cj, di, dj))


def dump_map(maps: KnownMaps, overlay_disinfected: bool = True) -> str:
    """Text grid, top row first: ``?`` unknown, ``.`` free, ``#`` occupied, ``D`` disinfected."""
    chars = np.full(maps.known.shape, "?", dtype="<U1")
    chars[maps.known == FREE] = "."
    chars[maps.known == OCCUPIED] = "#"
    if overlay_disinfected:
        chars[maps.disinfected] = "D"
    rows = ["".join(chars[:, iy]) for iy in range(chars.shape[1] - 1, -1, -1)]
    return "\n".join(rows) + "\n"
