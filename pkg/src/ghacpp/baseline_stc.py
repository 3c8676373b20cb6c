"""Online spanning-tree coverage baseline (labelled ``stc-surrogate`` in outputs).

Coarse cells are 2x2 blocks of the waypoint lattice. The robot walks the
sub-cell ring counterclockwise around a spanning tree that it grows
depth-first while walking: whenever the walk passes a side of the current
cell whose neighbour is Free and uncovered, that neighbour becomes a child and
the walk turns into it. When the ring closes, any Free cell discovered in the
meantime seeds a new tour after a shortest lattice transit.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cost import interpolate
from .genetic import Lattice, Point, neighbours
from .kernels import UNKNOWN
from .mapping import KnownMaps

log = logging.getLogger(__name__)

BASELINE_LABEL = "stc-surrogate"


class CoarseState(str, Enum):
    UNKNOWN = "unknown"
    FREE = "free"
    BLOCKED = "blocked"
    COVERED = "covered"


# local sub-cell offsets inside a coarse cell, in counterclockwise ring order
SW, SE, NE, NW = (0, 0), (1, 0), (1, 1), (0, 1)
_RING_NEXT = {SW: SE, SE: NE, NE: NW, NW: SW}
# side checked when leaving a sub-cell, and the sub-cell entered in that neighbour
_SIDE = {SW: ((0, -1), NW), SE: ((1, 0), SW), NE: ((0, 1), SE), NW: ((-1, 0), NE)}


@dataclass
class STCStep:
    waypoints: list[Point]
    complete: bool = False
    warning: str | None = None


@dataclass
class CoarseCellGrid:
    """Coarse decomposition plus the spanning tree grown so far."""

    lattice: Lattice
    offset: tuple[int, int]
    covered: set = field(default_factory=set)
    parent: dict = field(default_factory=dict)
    edges: set = field(default_factory=set)

    def cell_of(self, p: Point) -> tuple[int, int]:
        return ((p[0] - self.offset[0]) // 2, (p[1] - self.offset[1]) // 2)

    def local_of(self, p: Point) -> tuple[int, int]:
        return ((p[0] - self.offset[0]) % 2, (p[1] - self.offset[1]) % 2)

    def sub_point(self, cell, local) -> Point:
        return (2 * cell[0] + self.offset[0] + local[0], 2 * cell[1] + self.offset[1] + local[1])

    def sub_points(self, cell) -> list[Point]:
        return [self.sub_point(cell, q) for q in (SW, SE, NE, NW)]

    def add_edge(self, a, b):
        self.edges.add(frozenset((a, b)))
        self.parent[b] = a
        self.covered.add(b)

    def has_edge(self, a, b) -> bool:
        return frozenset((a, b)) in self.edges

    def is_free(self, cell, maps: KnownMaps) -> bool:
        """All fine C-space cells in the square spanned by the four sub-cell waypoints are Traversable."""
        pts = self.sub_points(cell)
        if not all(self.lattice.contains(p) for p in pts):
            return False
        x0, y0 = self.lattice.to_world(pts[0])
        x1, y1 = self.lattice.to_world(pts[2])
        res = maps.resolution_m
        i0, j0 = int(np.floor(x0 / res + 1e-9)), int(np.floor(y0 / res + 1e-9))
        i1, j1 = int(np.floor(x1 / res + 1e-9)), int(np.floor(y1 / res + 1e-9))
        return not maps.cspace[i0 : i1 + 1, j0 : j1 + 1].any()

    def state(self, cell, maps: KnownMaps) -> CoarseState:
        if cell in self.covered:
            return CoarseState.COVERED
        if self.is_free(cell, maps):
            return CoarseState.FREE
        pts = self.sub_points(cell)
        if all(self.lattice.contains(p) for p in pts):
            x0, y0 = self.lattice.to_world(pts[0])
            x1, y1 = self.lattice.to_world(pts[2])
            res = maps.resolution_m
            sub = maps.known[int(x0 / res) : int(x1 / res) + 1, int(y0 / res) : int(y1 / res) + 1]
            if (sub == UNKNOWN).any():
                return CoarseState.UNKNOWN
        return CoarseState.BLOCKED


def segment_clear(a: Point, b: Point, lattice: Lattice, maps: KnownMaps, step: float) -> bool:
    return not any(maps.is_blocked(p.x, p.y) for p in interpolate((a, b), lattice, step))


def lattice_path(
    start: Point, goals, lattice: Lattice, maps: KnownMaps, step: float, max_nodes: int = 100_000
) -> list[Point] | None:
    """Shortest 8-connected lattice path (BFS, unit step cost) from start to the first goal reached."""
    goals = set(goals)
    if start in goals:
        return [start]
    prev = {start: None}
    queue = deque([start])
    while queue and len(prev) < max_nodes:
        p = queue.popleft()
        for n in neighbours(p):
            if n in prev or not lattice.contains(n):
                continue
            if not segment_clear(p, n, lattice, maps, step):
                continue
            prev[n] = p
            if n in goals:
                path = [n]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            queue.append(n)
    return None


class STCPlanner:
    """Stateful online STC driver; call :meth:`stc_step` after every sensing update."""

    def __init__(self, lattice: Lattice, step: float):
        self.lattice = lattice
        self.step = step
        self.grid: CoarseCellGrid | None = None
        self.root_point: Point | None = None
        self.tour_moves = 0

    def _choose_offset(self, maps: KnownMaps, start: Point) -> tuple[int, int] | None:
        best, best_count = None, -1
        pts = self.lattice.points()
        for off in ((0, 0), (1, 0), (0, 1), (1, 1)):
            g = CoarseCellGrid(self.lattice, off)
            if not g.is_free(g.cell_of(start), maps):
                continue
            cells = {g.cell_of(p) for p in pts}
            count = sum(1 for c in sorted(cells) if g.is_free(c, maps))
            if count > best_count:
                best, best_count = off, count
        return best

    def _connectable(self, c, n, maps: KnownMaps) -> bool:
        g = self.grid
        if n in g.covered or not g.is_free(n, maps):
            return False
        # both ring crossings between c and n must be collision free
        d = (n[0] - c[0], n[1] - c[1])
        for q, (side, entry) in _SIDE.items():
            if side == d:
                a, b = g.sub_point(c, q), g.sub_point(n, entry)
                break
        back_side = (-d[0], -d[1])
        for q, (side, entry) in _SIDE.items():
            if side == back_side:
                a2, b2 = g.sub_point(n, q), g.sub_point(c, entry)
                break
        return segment_clear(a, b, self.lattice, maps, self.step) and segment_clear(
            a2, b2, self.lattice, maps, self.step
        )

    def _begin_tour(self, cell, point: Point):
        self.grid.covered.add(cell)
        self.grid.parent.setdefault(cell, None)
        self.root_point = point
        self.tour_moves = 0

    def stc_step(self, maps: KnownMaps, current: Point) -> STCStep:
        if self.grid is None:
            off = self._choose_offset(maps, current)
            if off is None:
                return STCStep([], complete=True, warning="start coarse cell is not free")
            self.grid = CoarseCellGrid(self.lattice, off)
            self._begin_tour(self.grid.cell_of(current), current)

        g = self.grid
        if self.root_point is not None and not (current == self.root_point and self.tour_moves > 0):
            c = g.cell_of(current)
            q = g.local_of(current)
            side, entry = _SIDE[q]
            n = (c[0] + side[0], c[1] + side[1])
            if g.has_edge(c, n):
                nxt = g.sub_point(n, entry)
            elif self._connectable(c, n, maps):
                g.add_edge(c, n)
                nxt = g.sub_point(n, entry)
            else:
                nxt = g.sub_point(c, _RING_NEXT[q])
            self.tour_moves += 1
            return STCStep([nxt])

        # ring closed: look for free cells discovered meanwhile
        self.root_point = None
        pts = self.lattice.points()
        cells = sorted({g.cell_of(p) for p in pts})
        pending = [c for c in cells if c not in g.covered and g.is_free(c, maps)]
        if not pending:
            return STCStep([], complete=True)
        goals = {p: c for c in pending for p in g.sub_points(c)}
        path = lattice_path(current, goals, self.lattice, maps, self.step)
        if path is None:
            return STCStep([], complete=True, warning="uncovered free cells are unreachable")
        target = path[-1]
        self._begin_tour(goals[target], target)
        return STCStep(path[1:])
