import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsim.scenario import (
    PolicyCompileError,
    ScenarioError,
    compile_policies,
    parse_scenario,
    serialize_scenario,
    validate_scenario,
)
from swarmsim.world import EntityKind

MINIMAL = """
[world]
extent = -50 -50 50 50
timestep = 0.1
duration_limit = 60
seed = 1

[entity d1]
kind = drone
spawn = 0 0 0 0
max_speed = 5

[swarm s1]
role = searchfollow
drones = d1
waypoints = 10 0, 20 0

[script]
"""


def test_parse_minimal_round_trips_fields():
    spec = parse_scenario(MINIMAL)
    assert len(spec.entities) == 1
    assert len(spec.swarms) == 1
    assert spec.timestep == 0.1
    assert spec.rng_seed == 1
    assert spec.entities[0].kind is EntityKind.DRONE
    assert spec.swarms[0].drone_ids == ("d1",)


def test_parse_demo10_swarm_sizes(demo_text):
    spec = parse_scenario(demo_text)
    assert [len(s.drone_ids) for s in spec.swarms] == [3, 4, 3]
    assert len([e for e in spec.entities if e.kind is EntityKind.DRONE]) == 10


def test_unknown_entity_reference_rejected():
    bad = MINIMAL.replace("[script]", "[script]\nat 1s p9 walkto 1 1 1.0")
    with pytest.raises(ScenarioError, match="unknown entity reference"):
        parse_scenario(bad)


def test_unknown_car_reference_in_entercar():
    bad = MINIMAL + "\nat 1s d1 entercar ghost\n"
    with pytest.raises(ScenarioError, match="unknown entity reference"):
        parse_scenario(bad)


def test_syntax_error_is_position_annotated():
    bad = "[world]\ntimestep 0.1\n"
    with pytest.raises(ScenarioError, match="line 2"):
        parse_scenario(bad)


def test_parse_serialize_parse_fixed_point(demo_text):
    spec = parse_scenario(demo_text)
    text = serialize_scenario(spec)
    again = parse_scenario(text)
    assert again == spec
    assert serialize_scenario(again) == text  # canonical form is stable


def test_validate_ok_on_demo(demo_spec):
    assert validate_scenario(demo_spec) == []


def test_validate_zero_timestep():
    spec = parse_scenario(MINIMAL)
    bad = dataclasses.replace(spec, timestep=0.0)
    assert any("timestep" in v for v in validate_scenario(bad))


def test_validate_spawn_outside_extent_names_entity():
    bad = MINIMAL.replace("spawn = 0 0 0 0", "spawn = 500 0 0 0")
    spec_err = None
    try:
        parse_scenario(bad)
    except ScenarioError as exc:
        spec_err = str(exc)
    assert spec_err is not None and "d1" in spec_err


def test_validate_orphan_drone():
    bad = MINIMAL.replace("drones = d1", "drones = d1") + """
[entity d2]
kind = drone
spawn = 1 1 0 0
max_speed = 5
"""
    with pytest.raises(ScenarioError, match="d2"):
        parse_scenario(bad)


def test_compile_every_drone_exactly_one_bundle(demo_spec):
    bundles = compile_policies(demo_spec)
    assert sorted(bundles) == sorted(demo_spec.drone_ids())
    for d, b in bundles.items():
        assert b.drone_id == d


def test_compile_strategic_identical_across_team(demo_spec):
    bundles = compile_policies(demo_spec)
    tables = {b.strategic for b in bundles.values()}
    assert len(tables) == 1


def test_compile_enter_event_lands_search_swarm(demo_spec):
    bundles = compile_policies(demo_spec)
    table = dict(next(iter(bundles.values())).strategic)
    rule = table["PersonEnteredCar"]
    assert rule.land_swarms == ("swarm-1",)
    assert rule.activate_swarms == ("swarm-2",)
    assert table["PersonExitedCar"].activate_swarms == ("swarm-3",)


def test_compile_single_drone_search_pattern():
    bundles = compile_policies(parse_scenario(MINIMAL))
    assert bundles["d1"].operational.search_pattern


def test_compile_same_swarm_shares_tactical(demo_spec):
    bundles = compile_policies(demo_spec)
    s1 = [bundles[d].tactical for d in ("d1", "d2", "d3")]
    assert s1[0] == s1[1] == s1[2]


def test_compile_deterministic(demo_spec):
    assert compile_policies(demo_spec) == compile_policies(demo_spec)


def test_compile_trackvehicle_requires_waypoints():
    text = MINIMAL.replace("role = searchfollow", "role = trackvehicle").replace(
        "waypoints = 10 0, 20 0\n", ""
    )
    with pytest.raises((ScenarioError, PolicyCompileError)):
        compile_policies(parse_scenario(text)) if "waypoints" in text else parse_scenario(text)


def test_compile_rejects_nonpositive_override():
    text = MINIMAL.replace("[script]", "").replace(
        "waypoints = 10 0, 20 0", "waypoints = 10 0, 20 0\nd0 = -3"
    )
    spec = parse_scenario(text + "\n[script]\n")
    with pytest.raises(PolicyCompileError):
        compile_policies(spec)


@st.composite
def scenario_texts(draw):
    n_drones = draw(st.integers(min_value=1, max_value=4))
    seed = draw(st.integers(min_value=0, max_value=2**31))
    timestep = draw(st.sampled_from(["0.05", "0.1", "0.25"]))
    speed = draw(st.floats(min_value=1.0, max_value=20.0, allow_nan=False).map(lambda x: round(x, 3)))
    lines = [
        "[world]",
        "extent = -100 -100 100 100",
        f"timestep = {timestep}",
        "duration_limit = 60",
        f"seed = {seed}",
    ]
    for i in range(n_drones):
        x = draw(st.integers(min_value=-90, max_value=90))
        lines += [f"[entity d{i}]", "kind = drone", f"spawn = {x} 0 0 0", f"max_speed = {speed}"]
    lines += [
        "[swarm s1]",
        "role = searchfollow",
        "drones = " + " ".join(f"d{i}" for i in range(n_drones)),
        "waypoints = 0 0, 10 10",
        "[script]",
    ]
    return "\n".join(lines) + "\n"


@given(scenario_texts())
@settings(max_examples=40, deadline=None)
def test_round_trip_stability_property(text):
    spec = parse_scenario(text)
    assert parse_scenario(serialize_scenario(spec)) == spec
