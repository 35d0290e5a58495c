"""swarmsim: deterministic multi-swarm UAV mission simulator.

Three-layer autonomy (operational / tactical / strategic) over a simulated
constrained ad-hoc network, with a live WebSocket ground-control gateway.
"""

from .engine import FaultInjection, OperatorCommand, SimConfig, Simulation
from .scenario import ScenarioSpec, compile_policies, parse_scenario, serialize_scenario
from .scoring import MissionReport, score_mission

__all__ = [
    "FaultInjection",
    "OperatorCommand",
    "SimConfig",
    "Simulation",
    "ScenarioSpec",
    "compile_policies",
    "parse_scenario",
    "serialize_scenario",
    "MissionReport",
    "score_mission",
]

__version__ = "0.1.0"
