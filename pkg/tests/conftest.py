import copy
import math
from importlib.resources import files

import numpy as np
import pytest

from ghacpp.kernels import FREE, OCCUPIED
from ghacpp.mapping import KnownMaps, inflate
from ghacpp.world import load_world, read_scenario

SCENARIO_DIR = files("ghacpp") / "scenarios"
SCENARIOS = ("empty_3x4", "center_obstacle_3x4", "inner_wall_3x4", "empty_6x14_5", "humans_6x14_5")


def scenario_path(name):
    return str(SCENARIO_DIR / f"{name}.json")


def scenario_doc(name):
    return copy.deepcopy(read_scenario(scenario_path(name)))


def box_doc(width=3.0, height=4.0, start=(0.5, 3.5), heading_deg=0.0, obstacles=(), humans=(), **blocks):
    doc = {
        "width_m": width,
        "height_m": height,
        "resolution_m": 0.05,
        "start": {"x": start[0], "y": start[1], "heading_deg": heading_deg},
        "obstacles": list(obstacles),
        "humans": list(humans),
    }
    doc.update(blocks)
    return doc


def known_open_maps(shape=(60, 80), res=0.05, inflation=0.30, walls=True):
    """A fully known map: Free interior, optional Occupied outer ring."""
    maps = KnownMaps.empty(shape, res, inflation)
    maps.known[:] = FREE
    if walls:
        maps.known[0, :] = maps.known[-1, :] = OCCUPIED
        maps.known[:, 0] = maps.known[:, -1] = OCCUPIED
    maps.cspace = inflate(maps.known, inflation, res)
    return maps


@pytest.fixture
def empty_world():
    return load_world(scenario_doc("empty_3x4"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def world_to_cell_center(ix, iy, res=0.05):
    return ((ix + 0.5) * res, (iy + 0.5) * res)


def angle_close(a, b, tol=1e-9):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d) < tol


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
