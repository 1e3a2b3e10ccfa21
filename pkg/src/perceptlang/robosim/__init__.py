"""Corridor simulator for the RoboMe case study."""

from .interface import RoboMeInterface, bind_foreign_interface
from .mission import Mission, MissionResult, robome_program, run_mission
from .scenario import default_scenario_text, load_scenario, parse_injections, parse_scenario
from .world import COMMANDS, Emission, GroundTruth, Injection, Motion, Obstacle, QrRead, World, WorldConfig, ray_hit

__all__ = [
    "COMMANDS",
    "Emission",
    "GroundTruth",
    "Injection",
    "Mission",
    "MissionResult",
    "Motion",
    "Obstacle",
    "QrRead",
    "RoboMeInterface",
    "World",
    "WorldConfig",
    "bind_foreign_interface",
    "default_scenario_text",
    "load_scenario",
    "parse_injections",
    "parse_scenario",
    "ray_hit",
    "robome_program",
    "run_mission",
]
