"""Genetic human-aware coverage path planning for a UV-C disinfection robot, with an online STC baseline."""
from .cost import CostModel, CostWeights, evaluate
from .executor import MissionConfig, MissionLog, RunMetrics, run_mission
from .footprint import DisinfectionFootprint, Sides
from .genetic import GAParams, Lattice, evolve_mini_trajectory
from .mapping import KnownMaps, SensorParams
from .world import Pose, ScenarioError, WorldModel, load_world, read_scenario

__version__ = "0.1.0"

__all__ = [
    "CostModel",
    "CostWeights",
    "DisinfectionFootprint",
    "GAParams",
    "KnownMaps",
    "Lattice",
    "MissionConfig",
    "MissionLog",
    "Pose",
    "RunMetrics",
    "ScenarioError",
    "SensorParams",
    "Sides",
    "WorldModel",
    "evaluate",
    "evolve_mini_trajectory",
    "load_world",
    "read_scenario",
    "run_mission",
]
