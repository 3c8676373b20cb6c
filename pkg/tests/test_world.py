import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghacpp.world import (
    Pose,
    ScenarioError,
    grid_dims,
    load_world,
    make_human,
    quantize_heading,
    raycast,
    validate_scenario,
)

from conftest import box_doc, scenario_doc


def dense_ray_oracle(solid, res, x0, y0, bearing, max_range, step=1e-4):
    """First sampled distance at which the ray sits inside a solid cell."""
    nx, ny = solid.shape
    c, s = math.cos(bearing), math.sin(bearing)
    t = 0.0
    while t <= max_range:
        ix, iy = int(math.floor((x0 + t * c) / res)), int(math.floor((y0 + t * s) / res))
        if not (0 <= ix < nx and 0 <= iy < ny):
            return None
        if solid[ix, iy]:
            return t
        t += step
    return None


def test_empty_3x4_grid_shape_and_ring():
    w = load_world(scenario_doc("empty_3x4"))
    assert w.occupancy.shape == (60, 80)
    ring = np.zeros((60, 80), dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    assert np.array_equal(w.occupancy, ring)


def test_center_obstacle_block_at_arena_center():
    w = load_world(scenario_doc("center_obstacle_3x4"))
    interior = w.occupancy[1:-1, 1:-1]
    ii, jj = np.nonzero(interior)
    cx = ((ii + 1).mean() + 0.5) * 0.05
    cy = ((jj + 1).mean() + 0.5) * 0.05
    assert cx == pytest.approx(1.5, abs=0.05)
    assert cy == pytest.approx(2.0, abs=0.05)
    # cells whose centers lie in [1, 2] x [1.5, 2.5]: 20 x 20
    assert interior.sum() == 400


def test_start_on_boundary_is_rejected():
    with pytest.raises(ScenarioError):
        load_world(box_doc(start=(0.0, 0.0)))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(start=(5.0, 1.0)),
        dict(obstacles=[{"x": 0.3, "y": 3.3, "w": 0.5, "h": 0.5}]),
        dict(obstacles=[{"x": 1.0, "y": 1.0, "w": 1.0, "h": 1.0}], humans=[{"x": 1.5, "y": 1.5}]),
        dict(humans=[{"x": 0.6, "y": 3.5}]),
    ],
    ids=["outside", "in-obstacle", "human-in-obstacle", "start-in-human"],
)
def test_inconsistent_scenarios_are_rejected(kwargs):
    with pytest.raises(ScenarioError):
        load_world(box_doc(**kwargs))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("width_m"),
        lambda d: d.update(resolution_m=-1),
        lambda d: d.update(colour="red"),
        lambda d: d["start"].update(z=1.0),
        lambda d: d.update(ga={"n": 1}),
    ],
)
def test_schema_violations(mutate):
    doc = box_doc()
    mutate(doc)
    with pytest.raises(ScenarioError):
        validate_scenario(doc)


def test_all_shipped_scenarios_validate_and_load():
    for name in ("empty_3x4", "center_obstacle_3x4", "inner_wall_3x4", "empty_6x14_5", "humans_6x14_5"):
        doc = scenario_doc(name)
        validate_scenario(doc)
        assert "estimate" in doc["notes"] or not doc["obstacles"] and not doc["humans"]
        load_world(doc)


def test_load_world_is_pure():
    a = load_world(scenario_doc("humans_6x14_5"))
    b = load_world(scenario_doc("humans_6x14_5"))
    assert np.array_equal(a.occupancy, b.occupancy)
    assert np.array_equal(a.solid, b.solid)
    assert a.occupancy.tobytes() == b.occupancy.tobytes()
    assert a.humans == b.humans and a.start_pose == b.start_pose


def test_world_arrays_are_read_only(empty_world):
    with pytest.raises(ValueError):
        empty_world.occupancy[5, 5] = True


def test_grid_dims_rounding():
    assert grid_dims(3.0, 4.0, 0.05) == (60, 80)
    assert grid_dims(6.0, 14.5, 0.05) == (120, 290)


def test_pose_heading_is_quantized():
    assert Pose(0, 0, math.radians(50)).heading == pytest.approx(math.pi / 4)
    assert Pose(0, 0, -math.pi / 2).heading == pytest.approx(3 * math.pi / 2)
    assert quantize_heading(2 * math.pi) == 0.0


def test_make_human_points_on_body_circle():
    h = make_human(1.0, 2.0, 0.25, 1.0, n_points=16)
    assert len(h.sample_points) == 16
    for x, y in h.sample_points:
        assert math.hypot(x - 1.0, y - 2.0) == pytest.approx(0.25)


# --------------------------------------------------------------------------
# raycast
# --------------------------------------------------------------------------


def test_raycast_no_hit_within_range():
    w = load_world(box_doc(width=10.0, height=10.0, start=(5.0, 5.0)))
    assert raycast(w, Pose(5.0, 5.0), 0.0, 3.0) is None


def test_raycast_wall_at_080_matches_dense_oracle():
    # a wall face at x = 1.8 gives 0.8 m from (1.0, 2.0)
    w = load_world(box_doc(obstacles=[{"x": 1.8, "y": 0.0, "w": 0.4, "h": 4.0}], start=(0.5, 0.5)))
    d = raycast(w, Pose(1.0, 2.0), 0.0, 8.0)
    oracle = dense_ray_oracle(w.solid, 0.05, 1.0, 2.0, 0.0, 8.0)
    assert d == pytest.approx(0.8, abs=0.05)
    assert d == pytest.approx(oracle, abs=0.05)


def test_raycast_human_disc():
    w = load_world(box_doc(width=6.0, height=6.0, start=(1.0, 3.0), humans=[{"x": 3.0, "y": 3.0, "body_radius_m": 0.25}]))
    d = raycast(w, Pose(1.0, 3.0), 0.0, 8.0)
    assert d == pytest.approx(2.0 - 0.25, abs=0.05)
    assert d == pytest.approx(dense_ray_oracle(w.solid, 0.05, 1.0, 3.0, 0.0, 8.0), abs=0.05)


@settings(max_examples=200, deadline=None)
@given(
    x=st.floats(0.3, 2.7),
    y=st.floats(0.3, 3.7),
    bearing=st.floats(0.0, 2 * math.pi, exclude_max=True),
)
def test_raycast_matches_dense_sampling_oracle(x, y, bearing):
    w = _obstacle_world()
    if w.solid[int(x / 0.05), int(y / 0.05)]:
        return
    d = raycast(w, Pose(x, y), bearing, 8.0)
    oracle = dense_ray_oracle(w.solid, 0.05, x, y, bearing, 8.0, step=2e-4)
    assert d is not None and oracle is not None
    assert abs(d - oracle) <= 3e-4


_OBSTACLE_WORLD = None


def _obstacle_world():
    global _OBSTACLE_WORLD
    if _OBSTACLE_WORLD is None:
        _OBSTACLE_WORLD = load_world(scenario_doc("center_obstacle_3x4"))
    return _OBSTACLE_WORLD


@pytest.mark.parametrize("k", range(8))
def test_raycast_symmetry_from_center(k):
    w = load_world(box_doc(width=4.0, height=4.0, start=(2.0, 2.0)))
    bearing = k * math.pi / 4
    d = raycast(w, Pose(2.0, 2.0), bearing, 8.0)
    # inner wall faces are one cell in from the arena edge
    half = 2.0 - 0.05
    analytic = half / max(abs(math.cos(bearing)), abs(math.sin(bearing)))
    assert d == pytest.approx(analytic, abs=0.05 * math.sqrt(2))
