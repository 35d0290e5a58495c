import pathlib

import pytest

from swarmsim import Simulation, SimConfig, parse_scenario
from swarmsim.geometry import Pose, Vec3
from swarmsim.perception import TargetObservation
from swarmsim.world import EntityKind, EntityState, WorldState

SCENARIO_DIR = pathlib.Path(__file__).resolve().parents[1] / "scenarios"

MINI_SCENARIO = """
[world]
extent = -100 -100 100 100
timestep = 0.05
duration_limit = 120
seed = 7

[entity base]
kind = basestation
spawn = 0 0 0 0

[entity p1]
kind = person
spawn = 30 5 0 0
max_speed = 1.5

[entity d1]
kind = drone
spawn = 2 0 0 0
max_speed = 8

[swarm s1]
role = searchfollow
drones = d1
activation = atstart
waypoints = 20 0, 45 0, 45 20, 20 20
d0 = 9

[mission]
name = mini
follow_duration = 10

[script]
at 5s p1 walkto 35 10 0.8
"""


@pytest.fixture(scope="session")
def demo_text() -> str:
    return (SCENARIO_DIR / "demo10.scn").read_text()


@pytest.fixture(scope="session")
def demo_spec(demo_text):
    return parse_scenario(demo_text)


@pytest.fixture(scope="session")
def golden_run(demo_spec):
    """The fault-free demo mission at seed 42, shared across tests."""
    sim = Simulation(SimConfig(scenario=demo_spec, seed=42, loss_base=0.0))
    log, report = sim.run()
    return sim, log, report


@pytest.fixture()
def mini_spec():
    return parse_scenario(MINI_SCENARIO)


def make_world(entries, wind=None) -> WorldState:
    """entries: id -> (kind, (x, y, z, yaw), max_speed)."""
    entities = {}
    for eid, (kind, pose, max_speed) in entries.items():
        entities[eid] = EntityState(
            pose=Pose(*pose), velocity=Vec3(), kind=kind, max_speed=max_speed
        )
    state = WorldState(entities=entities)
    if wind is not None:
        state.wind = wind
    return state


def make_obs(
    observed_id="p1",
    target_class="Person",
    cx=0.5,
    rng=10.0,
    bearing=0.0,
    geolocation=(10.0, 0.0, 0.0),
    stamp=0.0,
    confidence=0.9,
) -> TargetObservation:
    return TargetObservation(
        target_class=target_class,
        confidence=confidence,
        bbox=(cx, 0.5, 0.05, 0.1),
        range=rng,
        bearing=bearing,
        geolocation=geolocation,
        stamp=stamp,
        observed_id=observed_id,
    )


DRONE = EntityKind.DRONE
PERSON = EntityKind.PERSON
CAR = EntityKind.CAR
BASE = EntityKind.BASE_STATION
OBSTACLE = EntityKind.OBSTACLE
