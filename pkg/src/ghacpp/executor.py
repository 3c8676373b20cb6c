"""Mission loop: sense, plan, follow waypoints with the lamp interlock, stamp, repeat."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .baseline_stc import BASELINE_LABEL, STCPlanner, lattice_path
from .cost import CostModel, CostWeights, interpolate
from .footprint import DisinfectionFootprint, footprint_from_config
from .genetic import GAParams, Lattice, evolve_mini_trajectory
from .kernels import FREE, UNKNOWN
from .mapping import KnownMaps, SensorParams, mark_visited, sense_and_update, stamp_disinfection
from .world import HEADING_STEP, Pose, WorldModel, cell_index

log = logging.getLogger(__name__)

ALGOS = ("ghacpp", "stc")


class MissionError(RuntimeError):
    pass


@dataclass(frozen=True)
class MissionConfig:
    algo: str = "ghacpp"
    speed_mps: float = 0.1389
    turn_rate_radps: float = math.pi / 4
    lamp_safety_radius_m: float = 2.0
    max_cycles: int = 3000
    stagnation_cycles: int = 3
    max_replans: int = 5
    min_gain_cells: int = 50
    min_target_gain_cells: int = 70
    inflation_radius_m: float = 0.30
    cost_step_m: float = 0.05
    turn_penalty_monotone: bool = False
    neighbour_mode: str = "presence"
    stc_cell_size_m: float | None = None
    sensor: SensorParams = field(default_factory=SensorParams)
    footprint: DisinfectionFootprint = field(default_factory=DisinfectionFootprint)
    ga: GAParams = field(default_factory=GAParams)
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}")
        if self.speed_mps <= 0 or self.turn_rate_radps <= 0:
            raise ValueError("speed and turn rate must be positive")
        if self.lamp_safety_radius_m < 0:
            raise ValueError("lamp safety radius must be >= 0")

    @classmethod
    def from_scenario(cls, doc: dict, algo: str = "ghacpp", seed: int | None = None) -> "MissionConfig":
        mission = doc.get("mission", {})
        cost = doc.get("cost", {})
        sensor = doc.get("sensor", {})
        ga = GAParams.from_config(doc.get("ga"), seed=seed)
        stc_cell = doc.get("stc", {}).get("cell_size_m")
        if stc_cell is not None and not math.isclose(stc_cell, 2 * ga.waypoint_resolution_m):
            raise ValueError("stc.cell_size_m must equal 2 x waypoint_resolution_m")
        return cls(
            algo=algo,
            speed_mps=mission.get("speed_mps", 0.1389),
            turn_rate_radps=mission.get("turn_rate_radps", math.pi / 4),
            lamp_safety_radius_m=mission.get("lamp_safety_radius_m", 2.0),
            max_cycles=mission.get("max_cycles", 3000),
            stagnation_cycles=mission.get("stagnation_cycles", 3),
            max_replans=mission.get("max_replans", 5),
            min_target_gain_cells=mission.get("min_target_gain_cells", 70),
            inflation_radius_m=doc.get("mapping", {}).get("inflation_radius_m", 0.30),
            cost_step_m=cost.get("step_m", doc["resolution_m"]),
            turn_penalty_monotone=cost.get("turn_penalty_monotone", False),
            neighbour_mode=cost.get("neighbour_mode", "presence"),
            min_gain_cells=mission.get("min_gain_cells", 50),
            stc_cell_size_m=stc_cell,
            sensor=SensorParams(
                sensor.get("max_range_m", 8.0),
                sensor.get("angular_step_deg", 0.5),
                sensor.get("detection_range_m", 4.0),
            ),
            footprint=footprint_from_config(doc.get("footprint")),
            ga=ga,
            weights=CostWeights.from_config(cost),
        )


# --------------------------------------------------------------------------
# Log and metrics
# --------------------------------------------------------------------------


@dataclass
class Event:
    kind: str
    t: float
    data: dict

    def to_dict(self, seq: int) -> dict:
        return {"seq": seq, "t": self.t, "event": self.kind, **self.data}


@dataclass
class MissionLog:
    algo: str
    start_pose: Pose
    events: list[Event] = field(default_factory=list)
    planning_wallclock_ms: float = 0.0
    end_reason: str | None = None

    def add(self, kind: str, t: float, **data):
        self.events.append(Event(kind, t, data))

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def waypoint_poses(self) -> list[Pose]:
        """Start pose followed by every WaypointReached pose, in order."""
        out = [self.start_pose]
        for e in self.of_kind("WaypointReached"):
            out.append(Pose(e.data["x"], e.data["y"], e.data["heading"]))
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(i), sort_keys=True) + "\n" for i, e in enumerate(self.events))


@dataclass(frozen=True)
class RunMetrics:
    coverage_pct: float
    path_length_m: float
    n_turns: int
    total_turn_angle_rad: float
    time_s: float
    irradiation_events: int
    planning_wallclock_ms: float | None = 0.0


def heading_delta(a: float, b: float) -> float:
    """Absolute angle between two lattice headings, in [0, pi]."""
    k = int(round((b - a) / HEADING_STEP)) % 8
    return min(k, 8 - k) * HEADING_STEP


def _accumulate(poses: list[Pose]) -> tuple[float, int, float]:
    length, turns, angle = 0.0, 0, 0.0
    for a, b in zip(poses, poses[1:]):
        d = heading_delta(a.heading, b.heading)
        if d > 0:
            turns += 1
            angle += d
        length += math.hypot(b.x - a.x, b.y - a.y)
    return length, turns, angle


def reachable_free(known: np.ndarray, start: Pose, resolution_m: float) -> np.ndarray:
    """Known-Free cells 4-connected to the start cell."""
    labels, _ = ndimage.label(known == FREE)
    ix, iy = cell_index(start.x, start.y, resolution_m)
    lab = labels[ix, iy]
    if lab == 0:
        return np.zeros(known.shape, dtype=bool)
    return labels == lab


def compute_metrics(mission_log: MissionLog, maps: KnownMaps, speed_mps: float, turn_rate_radps: float) -> RunMetrics:
    length, turns, angle = _accumulate(mission_log.waypoint_poses())
    region = reachable_free(maps.known, mission_log.start_pose, maps.resolution_m)
    n_region = int(region.sum())
    coverage = 100.0 * int((maps.disinfected & region).sum()) / n_region if n_region else 0.0
    return RunMetrics(
        coverage_pct=coverage,
        path_length_m=length,
        n_turns=turns,
        total_turn_angle_rad=angle,
        time_s=length / speed_mps + angle / turn_rate_radps,
        irradiation_events=len(mission_log.of_kind("IrradiationEvent")),
        planning_wallclock_ms=mission_log.planning_wallclock_ms,
    )


def path_clearance(occupied: np.ndarray, resolution_m: float, poses: list[Pose], step_m: float = 0.01) -> float:
    """Smallest distance from the straight-line path through ``poses`` to any occupied cell square.

    The path is resampled every ``step_m``; the result is exact for each sample.
    """
    cells = np.argwhere(occupied)
    if len(cells) == 0 or not poses:
        return math.inf
    lo = cells * resolution_m
    hi = lo + resolution_m
    pts = [(poses[0].x, poses[0].y)]
    for a, b in zip(poses, poses[1:]):
        n = max(1, math.ceil(math.hypot(b.x - a.x, b.y - a.y) / step_m))
        pts.extend((a.x + (b.x - a.x) * k / n, a.y + (b.y - a.y) * k / n) for k in range(1, n + 1))
    best = math.inf
    for x, y in pts:
        dx = np.maximum(np.maximum(lo[:, 0] - x, x - hi[:, 0]), 0.0)
        dy = np.maximum(np.maximum(lo[:, 1] - y, y - hi[:, 1]), 0.0)
        best = min(best, float(np.sqrt(dx * dx + dy * dy).min()))
    return best


# --------------------------------------------------------------------------
# Mission
# --------------------------------------------------------------------------


class Mission:
    """Owns all mutable mission state. Use :func:`run_mission` for the one-shot API."""

    def __init__(self, world: WorldModel, config: MissionConfig):
        self.world = world
        self.cfg = config
        self.res = world.resolution_m
        self.maps = KnownMaps.empty(world.shape, self.res, config.inflation_radius_m)
        self.pose = world.start_pose
        self.lattice = Lattice(
            world.start_pose.x, world.start_pose.y, config.ga.waypoint_resolution_m, world.width_m, world.height_m
        )
        self.point = (0, 0)
        self.rng = np.random.default_rng(config.ga.rng_seed)
        self.log = MissionLog(config.algo if config.algo == "ghacpp" else BASELINE_LABEL, world.start_pose)
        self.human_truth = world.all_human_points()
        self.stamped_cells = 0
        self._length = 0.0
        self._angle = 0.0
        self._blacklist: set = set()
        self._reach: tuple[np.ndarray, np.ndarray] | None = None
        self._interlocked = False

    # -- time, motion and lamps ------------------------------------------------

    @property
    def t(self) -> float:
        return self._length / self.cfg.speed_mps + self._angle / self.cfg.turn_rate_radps

    def _lamps_allowed(self, pose: Pose) -> tuple[bool, int | None]:
        if self.cfg.algo == "stc" or len(self.human_truth) == 0:
            return True, None
        d = np.hypot(self.human_truth[:, 0] - pose.x, self.human_truth[:, 1] - pose.y)
        k = int(np.argmin(d))
        if d[k] <= self.cfg.lamp_safety_radius_m:
            return False, int(self.human_truth[k, 2])
        return True, None

    def _expose(self, pose: Pose) -> bool:
        lamps, hid = self._lamps_allowed(pose)
        if not lamps:
            if not self._interlocked:
                self.log.add("LampInterlock", self.t, human_id=hid)
            self._interlocked = True
            return False
        self._interlocked = False
        if len(self.human_truth):
            hit = self.cfg.footprint.covers_many(pose, self.human_truth[:, :2])
            for hid in sorted({int(h) for h in self.human_truth[hit, 2]}):
                self.log.add("IrradiationEvent", self.t, human_id=hid, x=pose.x, y=pose.y, heading=pose.heading)
        self.stamped_cells += stamp_disinfection(self.maps, pose, self.cfg.footprint, True)
        return True

    def _arrive(self, pose: Pose, lamps_on: bool):
        self.log.add("WaypointReached", self.t, x=pose.x, y=pose.y, heading=pose.heading, lamps_on=lamps_on)
        self.pose = pose

    def _rotate_to(self, heading: float):
        d = heading_delta(self.pose.heading, heading)
        if d == 0:
            return
        self._angle += d
        self._arrive(Pose(self.pose.x, self.pose.y, heading), not self._interlocked)

    def follow(self, points):
        """Drive through lattice ``points`` (``points[0]`` must be the current lattice point)."""
        if tuple(points[0]) != self.point:
            raise MissionError("trajectory does not start at the robot position")
        for a, b in zip(points, points[1:]):
            poses = interpolate((a, b), self.lattice, self.cfg.cost_step_m)[1:]
            lamps = True
            # heading change happens in place before the straight leg
            end = poses[-1]
            turn = heading_delta(self.pose.heading, end.heading)
            self._angle += turn
            start_len = self._length
            seg_len = math.hypot(end.x - self.pose.x, end.y - self.pose.y)
            for k, p in enumerate(poses, start=1):
                # intermediate event times only; the total uses the exact segment length
                self._length = start_len + seg_len * k / len(poses)
                lamps = self._expose(p)
            self._length = start_len + seg_len
            self._arrive(end, lamps)
            self.point = tuple(b)

    # -- sensing ---------------------------------------------------------------

    def sense(self):
        sense_and_update(self.maps, self.world, self.pose, self.cfg.sensor)
        self.log.add(
            "SenseUpdate",
            self.t,
            x=self.pose.x,
            y=self.pose.y,
            unknown_cells=self.maps.unknown_count(),
            humans_seen=sorted(self.maps.human_points),
        )

    def _check_start(self):
        if self.maps.is_blocked(self.pose.x, self.pose.y):
            raise MissionError("start pose is Blocked in C-space")

    # -- targets for stalled planning ------------------------------------------

    def frontier(self) -> np.ndarray:
        known = self.maps.known
        unknown = known == UNKNOWN
        adj = np.zeros_like(unknown)
        adj[1:, :] |= unknown[:-1, :]
        adj[:-1, :] |= unknown[1:, :]
        adj[:, 1:] |= unknown[:, :-1]
        adj[:, :-1] |= unknown[:, 1:]
        return (known == FREE) & adj

    def point_gains(self, points) -> np.ndarray:
        """Fresh cells reachable by the footprint from each lattice point under any heading."""
        free = np.ascontiguousarray(self.maps.known == FREE)
        useful = np.ascontiguousarray((free & ~self.maps.disinfected) | self.frontier())
        ci = np.empty(len(points), dtype=np.int64)
        cj = np.empty(len(points), dtype=np.int64)
        for k, p in enumerate(points):
            ci[k], cj[k] = cell_index(*self.lattice.to_world(p), self.res)
        if self._reach is None:
            cells = set()
            for h in range(8):
                di, dj = self.cfg.footprint.mask(h * HEADING_STEP, self.res)
                cells.update(zip(di.tolist(), dj.tolist()))
            arr = np.array(sorted(cells), dtype=np.int64)
            self._reach = (np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]))
        best = kernels.mask_sum(useful, ci, cj, *self._reach).astype(np.int64)
        if self.cfg.algo == "ghacpp":
            humans = self.maps.human_array()
            if len(humans):
                for k, p in enumerate(points):
                    x, y = self.lattice.to_world(p)
                    if np.hypot(humans[:, 0] - x, humans[:, 1] - y).min() <= self.cfg.lamp_safety_radius_m:
                        best[k] = 0
        return best

    def find_target_path(self):
        pts = [p for p in self.lattice.points() if p not in self._blacklist and not self.maps.is_blocked(*self.lattice.to_world(p))]
        if not pts:
            return None
        gains = self.point_gains(pts)
        goals = [p for p, g in zip(pts, gains) if g >= self.cfg.min_target_gain_cells]
        if not goals:
            return None
        return lattice_path(self.point, goals, self.lattice, self.maps, self.cfg.cost_step_m)

    def rotate_toward_frontier(self):
        fr = np.argwhere(self.frontier())
        if len(fr) == 0:
            return
        ang = np.arctan2((fr[:, 1] + 0.5) * self.res - self.pose.y, (fr[:, 0] + 0.5) * self.res - self.pose.x)
        sector = np.round(ang / HEADING_STEP).astype(int) % 8
        counts = np.bincount(sector, minlength=8)
        self._rotate_to(int(np.argmax(counts)) * HEADING_STEP)

    # -- main loops ------------------------------------------------------------

    def _end(self, reason: str):
        self.log.end_reason = reason
        self.log.add("MissionEnd", self.t, reason=reason, stamped_cells=self.stamped_cells)

    def run(self):
        self.sense()
        self._check_start()
        self._expose(self.pose)
        if self.cfg.algo == "ghacpp":
            self._run_ghacpp()
        else:
            self._run_stc()
        return self

    def _transit(self, path):
        """Drive a multi-point lattice path in chunks of at most max_points waypoints."""
        size = self.cfg.ga.max_points
        i = 0
        while i < len(path) - 1:
            chunk = path[i : i + size]
            self.log.add("MiniTrajectorySelected", self.t, points=[list(p) for p in chunk], source="transit")
            self.follow(chunk)
            mark_visited(self.maps, chunk)
            i += len(chunk) - 1
            self.sense()

    def _predict_gain(self, points) -> int:
        poses = interpolate(tuple(points), self.lattice, self.cfg.cost_step_m)[1:]
        dis = self.maps.disinfected.copy()
        free = np.ascontiguousarray(self.maps.known == FREE)
        humans = self.maps.human_array()
        n = 0
        for p in poses:
            if self.cfg.algo == "ghacpp" and len(humans):
                if np.hypot(humans[:, 0] - p.x, humans[:, 1] - p.y).min() <= self.cfg.lamp_safety_radius_m:
                    continue
            di, dj = self.cfg.footprint.mask(p.heading, self.res)
            ci, cj = cell_index(p.x, p.y, self.res)
            n += int(kernels.stamp(dis, free, ci, cj, di, dj))
        return n

    def _run_ghacpp(self):
        cfg = self.cfg
        stagnant = 0
        cycles = 0
        while cycles < cfg.max_cycles:
            cycles += 1
            if cycles > 1:
                self.sense()
            tic = time.perf_counter()
            snap = self.maps.snapshot()
            model = CostModel(
                snap,
                cfg.weights,
                cfg.footprint,
                cfg.cost_step_m,
                self.lattice,
                self.pose.heading,
                cfg.turn_penalty_monotone,
                cfg.neighbour_mode,
            )
            chosen = None
            for _ in range(1 + cfg.max_replans):
                c = evolve_mini_trajectory(self.point, cfg.ga, model, self.rng, self.lattice)
                if model.evaluate(c).penalties[0] == 0.0:
                    chosen = c
                    break
            self.log.planning_wallclock_ms += 1000.0 * (time.perf_counter() - tic)
            if chosen is None:
                self.rotate_toward_frontier()
                stagnant += 1
                continue
            if len(chosen) == 1 or self._predict_gain(chosen) < cfg.min_gain_cells:
                stagnant += 1
                if stagnant < cfg.stagnation_cycles:
                    continue
                tic = time.perf_counter()
                path = self.find_target_path()
                self.log.planning_wallclock_ms += 1000.0 * (time.perf_counter() - tic)
                if path is None:
                    self._end("Complete")
                    return
                self._blacklist.add(path[-1])
                self._transit(path)
                stagnant = 0
                continue
            stagnant = 0
            bd = model.evaluate(chosen)
            self.log.add(
                "MiniTrajectorySelected",
                self.t,
                points=[list(p) for p in chosen],
                source="ga",
                cost=bd.as_dict(),
            )
            self.follow(chosen)
            mark_visited(self.maps, chosen)
        self._end("Timeout")

    def _run_stc(self):
        planner = STCPlanner(self.lattice, self.cfg.cost_step_m)
        cycles = 0
        while cycles < self.cfg.max_cycles:
            cycles += 1
            if cycles > 1:
                self.sense()
            tic = time.perf_counter()
            step = planner.stc_step(self.maps.snapshot(), self.point)
            self.log.planning_wallclock_ms += 1000.0 * (time.perf_counter() - tic)
            if step.complete:
                if step.warning:
                    log.warning("stc: %s", step.warning)
                self._end("Complete" if step.warning is None else "Trapped")
                return
            pts = [self.point] + list(step.waypoints)
            self.log.add("MiniTrajectorySelected", self.t, points=[list(p) for p in pts], source="stc")
            self.follow(pts)
            mark_visited(self.maps, pts)
        self._end("Timeout")


def run_mission(world: WorldModel, config: MissionConfig):
    """Run one mission; returns ``(MissionLog, RunMetrics, KnownMaps)``."""
    m = Mission(world, config).run()
    metrics = compute_metrics(m.log, m.maps, config.speed_mps, config.turn_rate_radps)
    return m.log, metrics, m.maps
