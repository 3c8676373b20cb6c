"""Mini-trajectory chromosomes, the three mutation operators and the evolutionary loop.

A chromosome is a tuple of integer lattice points ``(i, j)``. The lattice is
anchored at the robot start pose with spacing ``waypoint_resolution_m``.
Point 0 is always the robot's current lattice position, consecutive points
are 8-adjacent and no point repeats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Point = tuple[int, int]
Chromosome = tuple[Point, ...]

# index k is heading k * 45 degrees
DIRECTIONS: tuple[Point, ...] = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_DIR_INDEX = {d: k for k, d in enumerate(DIRECTIONS)}


def chebyshev(a: Point, b: Point) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def direction_index(a: Point, b: Point) -> int:
    """Heading index (0..7) of the unit lattice step from ``a`` to ``b``."""
    return _DIR_INDEX[(b[0] - a[0], b[1] - a[1])]


def neighbours(p: Point) -> list[Point]:
    return [(p[0] + dx, p[1] + dy) for dx, dy in DIRECTIONS]


@dataclass(frozen=True)
class Lattice:
    """Waypoint lattice: point (i, j) sits at ``origin + (i, j) * spacing`` meters."""

    origin_x: float
    origin_y: float
    spacing: float
    width_m: float
    height_m: float

    def to_world(self, p: Point) -> tuple[float, float]:
        return self.origin_x + p[0] * self.spacing, self.origin_y + p[1] * self.spacing

    def nearest(self, x: float, y: float) -> Point:
        return (round((x - self.origin_x) / self.spacing), round((y - self.origin_y) / self.spacing))

    def contains(self, p: Point) -> bool:
        x, y = self.to_world(p)
        return 0.0 < x < self.width_m and 0.0 < y < self.height_m

    def points(self) -> list[Point]:
        """All in-bounds lattice points, ordered by (i, j)."""
        i0 = math.ceil(-self.origin_x / self.spacing)
        i1 = math.floor((self.width_m - self.origin_x) / self.spacing)
        j0 = math.ceil(-self.origin_y / self.spacing)
        j1 = math.floor((self.height_m - self.origin_y) / self.spacing)
        return [(i, j) for i in range(i0, i1 + 1) for j in range(j0, j1 + 1) if self.contains((i, j))]


class UnboundedLattice(Lattice):
    """Lattice without arena bounds, for tests and algebraic checks."""

    def __init__(self, spacing: float = 1.0):
        super().__init__(0.0, 0.0, spacing, math.inf, math.inf)

    def contains(self, p: Point) -> bool:
        return True


def is_valid_chromosome(c: Sequence[Point], max_points: int = 5, start: Point | None = None) -> bool:
    if not 1 <= len(c) <= max_points:
        return False
    if start is not None and tuple(c[0]) != tuple(start):
        return False
    if len(set(c)) != len(c):
        return False
    return all(chebyshev(a, b) == 1 for a, b in zip(c, c[1:]))


@dataclass(frozen=True)
class GAParams:
    population_size: int = 30
    max_generations: int = 100
    stability_t: int = 10
    sample_length: int = 4
    p_random_sample: float = 0.2
    p_add: float = 0.4
    p_remove: float = 0.4
    rng_seed: int = 0
    waypoint_resolution_m: float = 0.5
    max_points: int = 5

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if not 1 <= self.stability_t <= self.max_generations:
            raise ValueError("stability_t must lie in [1, max_generations]")
        if self.sample_length < 1 or self.sample_length + 1 > self.max_points:
            raise ValueError("need 1 <= sample_length and sample_length + 1 <= max_points")
        for p in (self.p_random_sample, self.p_add, self.p_remove):
            if not 0.0 <= p <= 1.0:
                raise ValueError("mutation probabilities must lie in [0, 1]")

    @classmethod
    def from_config(cls, cfg: dict | None, seed: int | None = None) -> "GAParams":
        cfg = cfg or {}
        return cls(
            population_size=cfg.get("n", 30),
            max_generations=cfg.get("m", 100),
            stability_t=cfg.get("t", 10),
            sample_length=cfg.get("l", 4),
            p_random_sample=cfg.get("p_random_sample", 0.2),
            p_add=cfg.get("p_add", 0.4),
            p_remove=cfg.get("p_remove", 0.4),
            rng_seed=cfg.get("seed", 0) if seed is None else seed,
            waypoint_resolution_m=cfg.get("waypoint_resolution_m", 0.5),
            max_points=cfg.get("max_points", 5),
        )


# --------------------------------------------------------------------------
# Mutations
# --------------------------------------------------------------------------


def random_sample_mutation(c: Chromosome, rng: np.random.Generator, lattice: Lattice, sample_length: int = 4) -> Chromosome:
    """Keep the first point and resample up to ``sample_length`` fresh 8-connected steps."""
    points = [c[0]]
    used = {c[0]}
    for _ in range(sample_length):
        cand = [n for n in neighbours(points[-1]) if n not in used and lattice.contains(n)]
        if not cand:
            break
        nxt = cand[int(rng.integers(len(cand)))]
        points.append(nxt)
        used.add(nxt)
    return tuple(points)


def insertion_candidates(c: Chromosome, index: int, lattice: Lattice) -> list[Point]:
    """Legal new points for insertion before position ``index`` (``index == len(c)`` appends)."""
    used = set(c)
    if index == len(c):
        return [n for n in neighbours(c[-1]) if n not in used and lattice.contains(n)]
    a, b = c[index - 1], c[index]
    return [n for n in neighbours(a) if chebyshev(n, b) == 1 and n not in used and lattice.contains(n)]


def add_point_mutation(c: Chromosome, rng: np.random.Generator, lattice: Lattice, max_points: int = 5) -> Chromosome:
    if len(c) >= max_points:
        return c
    index = int(rng.integers(1, len(c) + 1))
    cand = insertion_candidates(c, index, lattice)
    if not cand:
        return c
    p = cand[int(rng.integers(len(cand)))]
    return c[:index] + (p,) + c[index:]


def is_removable(c: Chromosome, index: int) -> bool:
    if index <= 0 or index >= len(c):
        return False
    if index == len(c) - 1:
        return True
    return chebyshev(c[index - 1], c[index + 1]) == 1


def remove_point_mutation(c: Chromosome, rng: np.random.Generator) -> Chromosome:
    if len(c) < 2:
        return c
    index = int(rng.integers(1, len(c)))
    if not is_removable(c, index):
        return c
    return c[:index] + c[index + 1 :]


# --------------------------------------------------------------------------
# Evolution
# --------------------------------------------------------------------------


@dataclass
class EvolutionTrace:
    generations: int = 0
    best_costs: list = None
    stopped_early: bool = False


def evolve_mini_trajectory(
    start: Point,
    params: GAParams,
    cost_fn: Callable[[Chromosome], float],
    rng: np.random.Generator,
    lattice: Lattice,
    trace: EvolutionTrace | None = None,
) -> Chromosome:
    """Evolve one mini-trajectory starting at lattice point ``start``.

    ``cost_fn`` must be pure for the duration of the call (it closes over a
    frozen map snapshot). Sorting ties go to the shorter chromosome, then to
    the earlier position in ``P + P_mutated``.
    """
    seed: Chromosome = (tuple(start),)
    L, max_pts = params.sample_length, params.max_points
    population = [random_sample_mutation(seed, rng, lattice, L) for _ in range(params.population_size)]
    if trace is not None:
        trace.best_costs = []
    previous = None
    repeats = 0
    for gen in range(1, params.max_generations + 1):
        mutated = []
        for c in population:
            if rng.random() < params.p_random_sample:
                c = random_sample_mutation(c, rng, lattice, L)
            if rng.random() < params.p_add:
                c = add_point_mutation(c, rng, lattice, max_pts)
            if rng.random() < params.p_remove:
                c = remove_point_mutation(c, rng)
            mutated.append(c)
        pool = population + mutated
        costs = [cost_fn(c) for c in pool]
        order = sorted(range(len(pool)), key=lambda i: (costs[i], len(pool[i]), i))
        population = [pool[i] for i in order[: params.population_size]]
        best = population[0]
        if trace is not None:
            trace.generations = gen
            trace.best_costs.append(costs[order[0]])
        repeats = repeats + 1 if best == previous else 0
        previous = best
        if repeats >= params.stability_t:
            if trace is not None:
                trace.stopped_early = True
            return best
    return population[0]
