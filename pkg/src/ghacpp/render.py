"""Deterministic SVG rendering of a finished mission.

Layers, bottom to top: arena background, disinfected shading, obstacles,
trajectory polyline, waypoints, humans, start marker. Coordinates are
written with three decimals so identical inputs give identical bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .executor import MissionLog
from .mapping import KnownMaps
from .world import WorldModel


@dataclass(frozen=True)
class RenderSpec:
    width_px: int = 600
    height_px: int = 800
    margin_px: float = 10.0
    background: str = "#ffffff"
    obstacle_fill: str = "#404040"
    disinfected_fill: str = "#5a6e8c"
    disinfected_opacity: float = 0.55
    trajectory_stroke: str = "#1f4fff"
    trajectory_width: float = 2.0
    waypoint_fill: str = "#1f4fff"
    waypoint_radius: float = 2.5
    human_safe: str = "#1a9c3a"
    human_irradiated: str = "#d62020"
    start_fill: str = "#ff9900"


@dataclass(frozen=True)
class Transform:
    """World meters to canvas pixels; y is flipped so north points up."""

    scale: float
    ox: float
    oy: float
    height_px: float

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        return self.ox + x * self.scale, self.height_px - (self.oy + y * self.scale)

    def to_world(self, px: float, py: float) -> tuple[float, float]:
        return (px - self.ox) / self.scale, (self.height_px - py - self.oy) / self.scale


def make_transform(world: WorldModel, spec: RenderSpec) -> Transform:
    avail_w = spec.width_px - 2 * spec.margin_px
    avail_h = spec.height_px - 2 * spec.margin_px
    scale = min(avail_w / world.width_m, avail_h / world.height_m)
    # center the arena inside the canvas
    ox = (spec.width_px - world.width_m * scale) / 2.0
    oy = (spec.height_px - world.height_m * scale) / 2.0
    return Transform(scale, ox, oy, spec.height_px)


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _cell_rects(mask: np.ndarray, res: float, tf: Transform) -> list[str]:
    """Merge horizontal runs of True cells into rectangles (row by row)."""
    out = []
    nx, ny = mask.shape
    for iy in range(ny):
        col = mask[:, iy]
        if not col.any():
            continue
        padded = np.concatenate(([False], col, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        for a, b in zip(edges[::2], edges[1::2]):
            x0, y1 = tf.to_px(a * res, (iy + 1) * res)
            x1, _ = tf.to_px(b * res, iy * res)
            out.append(f'<rect x="{_f(x0)}" y="{_f(y1)}" width="{_f(x1 - x0)}" height="{_f(res * tf.scale)}"/>')
    return out


def irradiated_humans(log: MissionLog) -> set[int]:
    return {int(e.data["human_id"]) for e in log.of_kind("IrradiationEvent")}


def render_svg(log: MissionLog, maps: KnownMaps, world: WorldModel, spec: RenderSpec | None = None) -> str:
    spec = spec or RenderSpec()
    tf = make_transform(world, spec)
    res = world.resolution_m
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width_px}" height="{spec.height_px}" '
        f'viewBox="0 0 {spec.width_px} {spec.height_px}">',
        f"<title>{escape(log.algo)}</title>",
        f'<rect width="{spec.width_px}" height="{spec.height_px}" fill="{spec.background}"/>',
    ]

    parts.append(f'<g id="disinfected" fill="{spec.disinfected_fill}" fill-opacity="{spec.disinfected_opacity}">')
    parts.extend(_cell_rects(maps.disinfected, res, tf))
    parts.append("</g>")

    parts.append(f'<g id="obstacles" fill="{spec.obstacle_fill}">')
    parts.extend(_cell_rects(np.asarray(world.occupancy), res, tf))
    parts.append("</g>")

    poses = log.waypoint_poses()
    pts = " ".join(f"{_f(px)},{_f(py)}" for px, py in (tf.to_px(p.x, p.y) for p in poses))
    parts.append(
        f'<g id="trajectory"><polyline points="{pts}" fill="none" stroke="{spec.trajectory_stroke}" '
        f'stroke-width="{_f(spec.trajectory_width)}" stroke-linejoin="round"/></g>'
    )

    parts.append(f'<g id="waypoints" fill="{spec.waypoint_fill}">')
    for p in poses[1:]:
        px, py = tf.to_px(p.x, p.y)
        parts.append(f'<circle cx="{_f(px)}" cy="{_f(py)}" r="{_f(spec.waypoint_radius)}"/>')
    parts.append("</g>")

    hit = irradiated_humans(log)
    parts.append('<g id="humans" fill="none" stroke-width="2">')
    for hid, h in enumerate(world.humans):
        px, py = tf.to_px(h.x, h.y)
        color = spec.human_irradiated if hid in hit else spec.human_safe
        parts.append(
            f'<circle id="human-{hid}" class="{"irradiated" if hid in hit else "safe"}" cx="{_f(px)}" cy="{_f(py)}" '
            f'r="{_f(h.body_radius_m * tf.scale)}" stroke="{color}"/>'
        )
    parts.append("</g>")

    sx, sy = tf.to_px(world.start_pose.x, world.start_pose.y)
    parts.append(f'<g id="start"><circle cx="{_f(sx)}" cy="{_f(sy)}" r="5.000" fill="{spec.start_fill}"/></g>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def polyline_length(svg: str, tf: Transform) -> float:
    """World-unit length of the first trajectory polyline in ``svg`` (for checks)."""
    start = svg.index('<polyline points="') + len('<polyline points="')
    raw = svg[start : svg.index('"', start)]
    pts = [tf.to_world(*map(float, tok.split(","))) for tok in raw.split()]
    return math.fsum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))
