"""Flow-level simulator for MapReduce applications in SDN-enabled cloud data centers."""

from .kernel import Entity, EventTag, SimEvent, Simulation
from .runner import ScenarioConfig, load_scenario, run_scenario, simulate
from .topology import PhysicalTopology, build_three_tier, parse_topology, usecase_topology

__version__ = "0.1.0"

__all__ = ["Entity", "EventTag", "SimEvent", "Simulation", "ScenarioConfig", "load_scenario",
           "run_scenario", "simulate", "PhysicalTopology", "build_three_tier", "parse_topology",
           "usecase_topology"]
