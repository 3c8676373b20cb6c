"""Two-lobe lateral ("butterfly") disinfection footprint.

Each lobe is a half-ellipse centered on the robot: ``lobe_half_length_m``
along the body axis and ``lobe_reach_m`` sideways. Points on the body axis
are covered by the lobe edges; only the robot center itself is excluded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .world import HEADING_STEP, Pose, heading_index


class Sides(str, Enum):
    BOTH = "both"
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class DisinfectionFootprint:
    lobe_reach_m: float = 0.9
    lobe_half_length_m: float = 0.35
    sides: Sides = Sides.BOTH
    _masks: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.lobe_reach_m <= 0 or self.lobe_half_length_m <= 0:
            raise ValueError("footprint dimensions must be positive")
        object.__setattr__(self, "sides", Sides(self.sides))

    @property
    def area_m2(self) -> float:
        """Analytic covered area (two half-ellipses, or one for a single side)."""
        lobe = math.pi * self.lobe_reach_m * self.lobe_half_length_m / 2.0
        return 2.0 * lobe if self.sides is Sides.BOTH else lobe

    def _in_lobe(self, u, v):
        a, b = self.lobe_half_length_m, self.lobe_reach_m
        inside = (u / a) ** 2 + (v / b) ** 2 <= 1.0 + 1e-12
        body = (u == 0) & (v == 0)
        if self.sides is Sides.BOTH:
            side = ~body
        elif self.sides is Sides.LEFT:
            side = (v >= 0) & ~body
        else:
            side = (v <= 0) & ~body
        return inside & side

    def covers(self, pose: Pose, point: tuple[float, float]) -> bool:
        """Analytic membership of a world point in the footprint placed at ``pose``."""
        dx, dy = point[0] - pose.x, point[1] - pose.y
        c, s = math.cos(pose.heading), math.sin(pose.heading)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return bool(self._in_lobe(np.float64(_snap(u)), np.float64(_snap(v))))

    def covers_many(self, pose: Pose, points: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`covers` over an (K, 2) array."""
        dx = points[:, 0] - pose.x
        dy = points[:, 1] - pose.y
        c, s = math.cos(pose.heading), math.sin(pose.heading)
        return self._in_lobe(_snap(dx * c + dy * s), _snap(-dx * s + dy * c))

    def mask(self, heading: float, resolution_m: float) -> tuple[np.ndarray, np.ndarray]:
        """Cell offsets (di, dj) covered when the robot sits at a cell center with ``heading``."""
        k = heading_index(heading)
        key = (k, resolution_m)
        cached = self._masks.get(key)
        if cached is None:
            cached = self._rasterize(k, resolution_m)
            self._masks[key] = cached
        return cached

    def _rasterize(self, k: int, res: float):
        theta = k * HEADING_STEP
        r = int(math.ceil(max(self.lobe_reach_m, self.lobe_half_length_m) / res)) + 1
        ii, jj = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
        dx, dy = ii * res, jj * res
        c, s = math.cos(theta), math.sin(theta)
        keep = self._in_lobe(_snap(dx * c + dy * s), _snap(-dx * s + dy * c))
        di = ii[keep].astype(np.int64)
        dj = jj[keep].astype(np.int64)
        di.setflags(write=False)
        dj.setflags(write=False)
        return di, dj

    def rasterize(self, pose: Pose, resolution_m: float) -> set[tuple[int, int]]:
        """Absolute grid cells covered at ``pose`` (pose taken at its cell center)."""
        di, dj = self.mask(pose.heading, resolution_m)
        ci = int(math.floor(pose.x / resolution_m + 1e-9))
        cj = int(math.floor(pose.y / resolution_m + 1e-9))
        return {(ci + a, cj + b) for a, b in zip(di.tolist(), dj.tolist())}


def _snap(v):
    # rotation by multiples of pi/4 leaves ~1e-17 residue where the exact value is 0
    return np.where(np.abs(v) < 1e-9, 0.0, v)


def footprint_from_config(cfg: dict | None) -> DisinfectionFootprint:
    cfg = cfg or {}
    return DisinfectionFootprint(
        lobe_reach_m=cfg.get("lobe_reach_m", 0.9),
        lobe_half_length_m=cfg.get("lobe_half_length_m", 0.35),
        sides=Sides(cfg.get("sides", "both")),
    )
