"""Ground-truth arena: walls, rectangular obstacles, static humans and the start pose."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import kernels

TWO_PI = 2.0 * math.pi
HEADING_STEP = math.pi / 4.0


class ScenarioError(ValueError):
    """Raised when a scenario document is malformed or physically inconsistent."""


def quantize_heading(theta: float) -> float:
    """Snap an angle to the nearest of the 8 lattice directions, in [0, 2*pi)."""
    k = int(round(theta / HEADING_STEP)) % 8
    return k * HEADING_STEP


def heading_index(theta: float) -> int:
    return int(round(theta / HEADING_STEP)) % 8


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", quantize_heading(self.heading))


@dataclass(frozen=True)
class Human:
    x: float
    y: float
    body_radius_m: float
    sigma: float
    sample_points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.sigma <= 0 or self.body_radius_m <= 0:
            raise ScenarioError("human sigma and body_radius_m must be positive")
        if len(self.sample_points) < 8:
            raise ScenarioError("a human needs at least 8 sample points")
        for px, py in self.sample_points:
            if math.hypot(px - self.x, py - self.y) > self.body_radius_m + 1e-9:
                raise ScenarioError("human sample point outside its body disc")


def make_human(x: float, y: float, body_radius_m: float, sigma: float, n_points: int = 16) -> Human:
    """Human with ``n_points`` samples evenly spaced on the body circle."""
    angles = np.arange(n_points) * (TWO_PI / n_points)
    pts = tuple((x + body_radius_m * math.cos(a), y + body_radius_m * math.sin(a)) for a in angles)
    return Human(x, y, body_radius_m, sigma, pts)


@dataclass
class WorldModel:
    """Hidden environment. ``occupancy`` holds walls and obstacles; ``solid`` adds human bodies."""

    width_m: float
    height_m: float
    resolution_m: float
    occupancy: np.ndarray
    humans: list[Human]
    start_pose: Pose
    solid: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.solid is None:
            self.solid = self.occupancy | self.human_mask()
        self.occupancy.setflags(write=False)
        self.solid.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return cell_index(x, y, self.resolution_m)

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return ((ix + 0.5) * self.resolution_m, (iy + 0.5) * self.resolution_m)

    def human_mask(self, humans: list[Human] | None = None) -> np.ndarray:
        """Cells whose centers lie inside any human body disc."""
        humans = self.humans if humans is None else humans
        nx, ny = self.occupancy.shape
        res = self.resolution_m
        cx = (np.arange(nx) + 0.5) * res
        cy = (np.arange(ny) + 0.5) * res
        out = np.zeros((nx, ny), dtype=bool)
        for h in humans:
            d2 = (cx[:, None] - h.x) ** 2 + (cy[None, :] - h.y) ** 2
            out |= d2 <= h.body_radius_m**2
        return out

    def all_human_points(self) -> np.ndarray:
        """(K, 3) array of (x, y, human_id) for every ground-truth sample point."""
        rows = [(px, py, hid) for hid, h in enumerate(self.humans) for px, py in h.sample_points]
        return np.array(rows, dtype=float).reshape(-1, 3)


def cell_index(x: float, y: float, res: float) -> tuple[int, int]:
    return int(math.floor(x / res + 1e-9)), int(math.floor(y / res + 1e-9))


def grid_dims(width_m: float, height_m: float, res: float) -> tuple[int, int]:
    return math.ceil(round(width_m / res, 9)), math.ceil(round(height_m / res, 9))


# --------------------------------------------------------------------------
# Scenario documents
# --------------------------------------------------------------------------

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_COUNT = {"type": "integer", "minimum": 1}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["width_m", "height_m", "resolution_m", "start"],
    "properties": {
        "name": {"type": "string"},
        "notes": {"type": "string"},
        "width_m": _POS,
        "height_m": _POS,
        "resolution_m": _POS,
        "start": {
            "type": "object",
            "required": ["x", "y"],
            "properties": {"x": _NUM, "y": _NUM, "heading_deg": _NUM},
            "additionalProperties": False,
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y", "w", "h"],
                "properties": {"x": _NUM, "y": _NUM, "w": _POS, "h": _POS},
                "additionalProperties": False,
            },
        },
        "humans": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y"],
                "properties": {
                    "x": _NUM,
                    "y": _NUM,
                    "body_radius_m": _POS,
                    "sigma": _POS,
                    "n_points": {"type": "integer", "minimum": 8},
                },
                "additionalProperties": False,
            },
        },
        "sensor": {
            "type": "object",
            "properties": {
                "max_range_m": _POS,
                "angular_step_deg": _POS,
                "detection_range_m": _NONNEG,
            },
            "additionalProperties": False,
        },
        "footprint": {
            "type": "object",
            "properties": {
                "lobe_reach_m": _POS,
                "lobe_half_length_m": _POS,
                "sides": {"enum": ["both", "left", "right"]},
            },
            "additionalProperties": False,
        },
        "ga": {
            "type": "object",
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "m": _COUNT,
                "t": _COUNT,
                "l": _COUNT,
                "p_random_sample": _PROB,
                "p_add": _PROB,
                "p_remove": _PROB,
                "seed": {"type": "integer"},
                "waypoint_resolution_m": _POS,
                "max_points": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "cost": {
            "type": "object",
            "properties": {
                "w_collision": _NONNEG,
                "w_human": _NONNEG,
                "w_visited": _NONNEG,
                "w_neighbour": _NONNEG,
                "w_turn": _NONNEG,
                "w_repeat": _NONNEG,
                "sigma_default": _POS,
                "step_m": _POS,
                "turn_penalty_monotone": {"type": "boolean"},
                "neighbour_mode": {"enum": ["absence", "presence"]},
            },
            "additionalProperties": False,
        },
        "mapping": {
            "type": "object",
            "properties": {"inflation_radius_m": _NONNEG},
            "additionalProperties": False,
        },
        "mission": {
            "type": "object",
            "properties": {
                "speed_mps": _POS,
                "turn_rate_radps": _POS,
                "lamp_safety_radius_m": _NONNEG,
                "max_cycles": _COUNT,
                "stagnation_cycles": _COUNT,
                "max_replans": {"type": "integer", "minimum": 0},
                "min_target_gain_cells": _COUNT,
                "min_gain_cells": _COUNT,
            },
            "additionalProperties": False,
        },
        "stc": {
            "type": "object",
            "properties": {"cell_size_m": _POS},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def validate_scenario(doc: Any) -> None:
    """Schema check only; raises :class:`ScenarioError` with the first violation."""
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {where}: {exc.message}") from None


def read_scenario(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_world(doc: dict) -> WorldModel:
    """Rasterize a scenario document into a :class:`WorldModel`.

    The start position is snapped to the center of its grid cell so that the
    waypoint lattice (anchored at the start) lands on cell centers.
    """
    validate_scenario(doc)
    res = float(doc["resolution_m"])
    width, height = float(doc["width_m"]), float(doc["height_m"])
    nx, ny = grid_dims(width, height, res)
    if nx < 3 or ny < 3:
        raise ScenarioError("arena too small for its resolution")
    occ = np.zeros((nx, ny), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    cx = (np.arange(nx) + 0.5) * res
    cy = (np.arange(ny) + 0.5) * res
    for ob in doc.get("obstacles", []):
        x0, y0 = ob["x"], ob["y"]
        x1, y1 = x0 + ob["w"], y0 + ob["h"]
        mx = (cx >= x0) & (cx <= x1)
        my = (cy >= y0) & (cy <= y1)
        occ |= mx[:, None] & my[None, :]

    sigma_default = doc.get("cost", {}).get("sigma_default", 1.0)
    humans = [
        make_human(
            h["x"],
            h["y"],
            h.get("body_radius_m", 0.25),
            h.get("sigma", sigma_default),
            h.get("n_points", 16),
        )
        for h in doc.get("humans", [])
    ]

    s = doc["start"]
    sx, sy = float(s["x"]), float(s["y"])
    if not (0.0 <= sx < width and 0.0 <= sy < height):
        raise ScenarioError("start pose outside the arena")
    ix, iy = cell_index(sx, sy, res)
    if occ[ix, iy]:
        raise ScenarioError("start pose inside an obstacle")
    start = Pose((ix + 0.5) * res, (iy + 0.5) * res, math.radians(s.get("heading_deg", 0.0)))

    world = WorldModel(width, height, res, occ, humans, start)
    hm = world.human_mask()
    if (hm & occ).any():
        raise ScenarioError("human overlaps an obstacle")
    for h in humans:
        if math.hypot(h.x - start.x, h.y - start.y) <= h.body_radius_m:
            raise ScenarioError("start pose inside a human body disc")
    return world


def raycast(world: WorldModel, origin: Pose, bearing: float, max_range: float) -> float | None:
    """Distance along ``bearing`` to the first solid cell boundary, or None if nothing within range."""
    d, _, _ = kernels.cast_ray(world.solid, world.resolution_m, origin.x, origin.y, bearing, max_range)
    if math.isinf(d) or d > max_range:
        return None
    return d
