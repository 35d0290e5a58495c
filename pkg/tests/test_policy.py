import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsim.control import GlobalPosition, LocalPosition, LocalVelocity
from swarmsim.geometry import Pose
from swarmsim.network import Address, Command, Event, Priority, SwarmMessage
from swarmsim.policy import (
    BehaviorDetectorState,
    DronePolicyState,
    OpState,
    TacticalState,
    TeamState,
    detect_complex_behavior,
    op_state_violations,
    step_operational,
    step_strategic,
    step_tactical,
)
from swarmsim.scenario import compile_policies, build_strategic_table

from conftest import make_obs


@pytest.fixture()
def ps(mini_spec):
    bundles = compile_policies(mini_spec)
    return DronePolicyState(drone_id="d1", bundle=bundles["d1"], home=(2.0, 0.0, 0.0))


def cmd_msg(name, sender="gcs", priority=Priority.STRATEGIC, point=None, mode=None, hint=None):
    return SwarmMessage(
        priority=priority,
        sender=sender,
        to=Address.drone("d1"),
        payload=Command(name, point=point, mode=mode, hint=hint),
    )


def airborne(alt=10.0):
    return Pose(40.0, 0.0, alt, 0.0)  # well away from home at (2, 0)


GROUND = Pose(2.0, 0.0, 0.0, 0.0)


class TestOperationalTransitions:
    def test_state_set_invariants_checker(self):
        assert op_state_violations({OpState.TAKEOFF, OpState.LANDING})
        assert op_state_violations({OpState.IDLE_SLEEPING, OpState.SEARCHING})
        assert op_state_violations({OpState.SEARCHING, OpState.FOLLOWING})
        assert not op_state_violations({OpState.NAVIGATING})

    def test_idle_plus_arm_goto_takes_off_then_navigates(self, ps):
        inbox = [cmd_msg("ARM", point=(40.0, 0.0, 10.0))]
        sp, _ = step_operational(ps, GROUND, None, inbox, 0.0, 0.05)
        assert ps.op == {OpState.TAKEOFF}
        assert isinstance(sp, LocalVelocity) and sp.vz > 0
        sp, _ = step_operational(ps, Pose(2.0, 0.0, 10.0, 0.0), None, [], 5.0, 0.05)
        assert OpState.NAVIGATING in ps.op
        assert isinstance(sp, GlobalPosition)

    def test_searching_gains_following_on_first_person(self, ps):
        ps.op = {OpState.SEARCHING}
        obs = [make_obs(observed_id="p1")]
        _, events = step_operational(ps, airborne(), obs, [], 1.0, 0.05)
        assert OpState.FOLLOWING in ps.op
        assert OpState.SEARCHING not in ps.op
        assert any(e.kind == "TargetFound" for e in events)

    def test_following_plus_land_returns_to_base(self, ps):
        ps.op = {OpState.FOLLOWING}
        ps.lock = ps.lock.__class__("p1", 0.0, 0.0)
        step_operational(ps, airborne(), None, [cmd_msg("LAND")], 1.0, 0.05)
        assert ps.op == {OpState.RETURNING}
        assert ps.lock.locked_id is None

    def test_landing_at_home_then_idle(self, ps):
        ps.op = {OpState.RETURNING}
        sp, _ = step_operational(ps, Pose(2.0, 0.0, 10.0, 0.0), None, [], 1.0, 0.05)
        assert OpState.LANDING in ps.op
        step_operational(ps, GROUND, None, [], 2.0, 0.05)
        assert ps.op == {OpState.IDLE_SLEEPING}

    def test_endurance_forces_return(self, ps):
        ps.op = {OpState.SEARCHING}
        ps.endurance_remaining = ps.bundle.operational.return_margin - 1.0
        step_operational(ps, airborne(), None, [], 1.0, 0.05)
        assert OpState.RETURNING in ps.op

    @given(
        start=st.sampled_from(
            [
                frozenset({OpState.SEARCHING}),
                frozenset({OpState.FOLLOWING}),
                frozenset({OpState.TRACKING}),
                frozenset({OpState.NAVIGATING}),
                frozenset({OpState.TAKEOFF}),
            ]
        )
    )
    @settings(max_examples=20, deadline=None)
    def test_land_precedence_property(self, start):
        from swarmsim import parse_scenario
        from conftest import MINI_SCENARIO

        bundles = compile_policies(parse_scenario(MINI_SCENARIO))
        ps = DronePolicyState(drone_id="d1", bundle=bundles["d1"], home=(2.0, 0.0, 0.0))
        ps.op = set(start)
        step_operational(ps, airborne(), None, [cmd_msg("LAND")], 1.0, 0.05)
        assert not ps.op & {OpState.SEARCHING, OpState.FOLLOWING, OpState.TRACKING}

    def test_state_invariants_hold_through_mission_fragment(self, ps):
        pose = GROUND
        inboxes = {0: [cmd_msg("ARM")]}
        for tick in range(400):
            t = tick * 0.05
            obs = [make_obs(observed_id="p1")] if tick % 4 == 0 and t > 10 else None
            step_operational(ps, pose, obs, inboxes.get(tick, []), t, 0.05)
            assert op_state_violations(ps.op) == []
            z = min(10.0, t * 2.0)
            pose = Pose(5.0, 0.0, z, 0.0)


class TestLandQuorum:
    def test_single_peer_vote_insufficient(self, ps):
        ps.op = {OpState.SEARCHING}
        vote = cmd_msg("LAND_VOTE", sender="d2", priority=Priority.TACTICAL)
        step_operational(ps, airborne(), None, [vote], 1.0, 0.05)
        assert OpState.SEARCHING in ps.op

    def test_two_distinct_peer_votes_land(self, ps):
        ps.op = {OpState.SEARCHING}
        votes = [
            cmd_msg("LAND_VOTE", sender="d2", priority=Priority.TACTICAL),
            cmd_msg("LAND_VOTE", sender="d3", priority=Priority.TACTICAL),
        ]
        step_operational(ps, airborne(), None, votes, 1.0, 0.05)
        assert ps.op == {OpState.RETURNING}

    def test_duplicate_votes_from_same_peer_do_not_count_twice(self, ps):
        ps.op = {OpState.SEARCHING}
        votes = [
            cmd_msg("LAND_VOTE", sender="d2", priority=Priority.TACTICAL),
            cmd_msg("LAND_VOTE", sender="d2", priority=Priority.TACTICAL),
        ]
        step_operational(ps, airborne(), None, votes, 1.0, 0.05)
        assert OpState.SEARCHING in ps.op

    def test_gcs_land_is_unilateral(self, ps):
        ps.op = {OpState.TRACKING}
        step_operational(ps, airborne(), None, [cmd_msg("LAND")], 1.0, 0.05)
        assert ps.op == {OpState.RETURNING}


class TestComplexBehaviorDetector:
    def _near_obs(self, t):
        return [
            make_obs(observed_id="p1", geolocation=(50.0, 0.5, 0.0), stamp=t),
            make_obs(observed_id="c1", target_class="Car", geolocation=(50.0, 0.0, 0.0), stamp=t),
        ]

    def test_scripted_enter_sequence(self):
        # Oracle: hand-replay -- co-located 3 s, person gone 2.4 s, car stays.
        det = BehaviorDetectorState()
        events = []
        t = 0.0
        for _ in range(15):  # 3 s near
            ev = detect_complex_behavior(det, self._near_obs(t), t)
            assert ev is None
            t += 0.2
        car_only = [make_obs(observed_id="c1", target_class="Car", geolocation=(50.0, 0.0, 0.0))]
        for _ in range(18):  # 3.6 s absent: grace + confirm window must elapse
            ev = detect_complex_behavior(det, car_only, t)
            if ev:
                events.append((t, ev))
            t += 0.2
        assert len(events) == 1
        assert events[0][1].kind == "PersonEnteredCar"
        loc = events[0][1].location
        assert math.hypot(loc[0] - 50.0, loc[1] - 0.0) < 2.0
        # Event fires once the absence has lasted the confirm window plus the
        # sighting grace (absence cannot be declared before the grace runs out).
        assert events[0][0] == pytest.approx(3.0 + det.person_grace + det.confirm_window, abs=0.5)

    def test_empty_stream_never_fires(self):
        det = BehaviorDetectorState()
        for tick in range(100):
            assert detect_complex_behavior(det, [], tick * 0.2) is None

    def test_person_never_near_car_no_event(self):
        det = BehaviorDetectorState()
        for tick in range(100):
            t = tick * 0.2
            obs = [
                make_obs(observed_id="p1", geolocation=(0.0, 0.0, 0.0), stamp=t),
                make_obs(observed_id="c1", target_class="Car", geolocation=(30.0, 0.0, 0.0), stamp=t),
            ]
            assert detect_complex_behavior(det, obs, t) is None

    def test_person_only_stream_no_event(self):
        # Without a car in view the detector must never fire.
        det = BehaviorDetectorState()
        for tick in range(200):
            t = tick * 0.2
            obs = [make_obs(observed_id="p1", geolocation=(tick * 0.1, 0.0, 0.0), stamp=t)]
            assert detect_complex_behavior(det, obs, t) is None

    def test_exit_sequence(self):
        det = BehaviorDetectorState()
        t = 0.0
        # Car drives past (seen moving), then stops.
        for i in range(20):
            obs = [
                make_obs(
                    observed_id="c1", target_class="Car", geolocation=(30.0 + i * 0.8, 0.0, 0.0), stamp=t
                )
            ]
            assert detect_complex_behavior(det, obs, t) is None
            t += 0.2
        for _ in range(25):  # stopped for 5 s
            obs = [make_obs(observed_id="c1", target_class="Car", geolocation=(45.2, 0.0, 0.0), stamp=t)]
            assert detect_complex_behavior(det, obs, t) is None
            t += 0.2
        # Person appears at the door.
        obs = [
            make_obs(observed_id="c1", target_class="Car", geolocation=(45.2, 0.0, 0.0), stamp=t),
            make_obs(observed_id="p1", geolocation=(45.8, 1.0, 0.0), stamp=t),
        ]
        ev = detect_complex_behavior(det, obs, t)
        assert ev is not None and ev.kind == "PersonExitedCar"
        # Resets after emission: the same person lingering does not re-fire.
        t += 0.2
        assert detect_complex_behavior(det, obs, t) is None

    def test_parked_car_walkup_does_not_fire_exit(self):
        # A person walking up to a never-moving car is not an exit.
        det = BehaviorDetectorState()
        t = 0.0
        for _ in range(25):
            obs = [make_obs(observed_id="c1", target_class="Car", geolocation=(40.0, 0.0, 0.0), stamp=t)]
            assert detect_complex_behavior(det, obs, t) is None
            t += 0.2
        for i in range(40):
            px = 30.0 + i * 0.3
            obs = [
                make_obs(observed_id="c1", target_class="Car", geolocation=(40.0, 0.0, 0.0), stamp=t),
                make_obs(observed_id="p1", geolocation=(px, 0.0, 0.0), stamp=t),
            ]
            assert detect_complex_behavior(det, obs, t) is None
            t += 0.2


class TestTactical:
    def test_target_found_becomes_goto_for_peers(self, demo_spec):
        bundles = compile_policies(demo_spec)
        group = [
            DronePolicyState(drone_id=d, bundle=bundles[d], home=(0.0, 0.0, 0.0))
            for d in ("d1", "d2", "d3")
        ]
        ts = TacticalState("swarm-1")
        ev = Event("TargetFound", location=(50.0, 20.0, 0.0), target_class="Person")
        msgs, survivors = step_tactical(ts, group, [("d2", ev)], 10.0)
        assert len(msgs) == 1
        assert msgs[0].payload.name == "GOTO"
        assert msgs[0].payload.point == (50.0, 20.0, 0.0)
        assert msgs[0].to == Address.swarm("swarm-1")
        assert msgs[0].sender == "d2"
        assert len(survivors) == 1

    def test_dedup_within_window(self, demo_spec):
        bundles = compile_policies(demo_spec)
        group = [
            DronePolicyState(drone_id=d, bundle=bundles[d], home=(0.0, 0.0, 0.0))
            for d in ("d1", "d2", "d3")
        ]
        ts = TacticalState("swarm-1")
        ev1 = Event("PersonEnteredCar", location=(1.0, 2.0, 0.0))
        ev2 = Event("PersonEnteredCar", location=(1.1, 2.0, 0.0))
        _, s1 = step_tactical(ts, group, [("d1", ev1), ("d2", ev2)], 10.0)
        assert len(s1) == 1
        _, s2 = step_tactical(ts, group, [("d3", ev2)], 12.0)  # inside 5 s window
        assert s2 == []
        _, s3 = step_tactical(ts, group, [("d3", ev2)], 20.0)  # window expired
        assert len(s3) == 1

    def test_no_events_no_messages(self, demo_spec):
        bundles = compile_policies(demo_spec)
        group = [DronePolicyState(drone_id="d1", bundle=bundles["d1"], home=(0.0, 0.0, 0.0))]
        msgs, survivors = step_tactical(TacticalState("swarm-1"), group, [], 5.0)
        assert msgs == [] and survivors == []

    def test_trackers_are_not_pulled_off_station(self, demo_spec):
        bundles = compile_policies(demo_spec)
        group = [
            DronePolicyState(drone_id=d, bundle=bundles[d], home=(0.0, 0.0, 0.0))
            for d in ("d4", "d5")
        ]
        ev = Event("TargetFound", location=(5.0, 5.0, 0.0), target_class="Car")
        msgs, _ = step_tactical(TacticalState("swarm-2"), group, [("d4", ev)], 3.0)
        assert msgs == []


def team_state(demo_spec, handled=frozenset()):
    return TeamState(
        table=build_strategic_table(demo_spec),
        swarm_roles=tuple((s.id, s.role) for s in demo_spec.swarms),
        positions=tuple(
            (d, (float(i), 0.0, 10.0)) for i, d in enumerate(demo_spec.drone_ids())
        ),
        handled=handled,
        altitude=10.0,
    )


class TestStrategic:
    def test_enter_event_lands_s1_activates_s2(self, demo_spec):
        team = team_state(demo_spec)
        ev = Event("PersonEnteredCar", location=(120.0, -20.0, 0.0), reporter="d2")
        msgs = step_strategic(team, ev)
        by_target = {(m.payload.name, m.to.target) for m in msgs}
        assert ("LAND", "swarm-1") in by_target
        assert ("ARM", "swarm-2") in by_target
        arm = next(m for m in msgs if m.payload.name == "ARM")
        assert arm.payload.mode == "TRACK"
        assert arm.payload.hint == (120.0, -20.0, 0.0)
        assert all(m.priority == Priority.STRATEGIC for m in msgs)

    def test_exit_event_recruits_s3_at_reporter_position(self, demo_spec):
        team = team_state(demo_spec)
        ev = Event("PersonExitedCar", location=(-60.0, 110.0, 0.0), reporter="d7")
        msgs = step_strategic(team, ev)
        arm = next(m for m in msgs if m.payload.name == "ARM")
        assert arm.to == Address.swarm("swarm-3")
        assert arm.payload.mode == "FOLLOW"
        pos = dict(team.positions)["d7"]
        assert arm.payload.point == (pos[0], pos[1], 10.0)
        assert arm.sender == "d7"

    def test_handled_event_is_ignored(self, demo_spec):
        team = team_state(demo_spec, handled=frozenset({"PersonEnteredCar"}))
        ev = Event("PersonEnteredCar", location=(0.0, 0.0, 0.0), reporter="d2")
        assert step_strategic(team, ev) == []

    def test_pure_function_of_inputs(self, demo_spec):
        team = team_state(demo_spec)
        ev = Event("PersonEnteredCar", location=(1.0, 2.0, 0.0), reporter="d1")
        a = [(m.payload, m.to, m.sender) for m in step_strategic(team, ev)]
        b = [(m.payload, m.to, m.sender) for m in step_strategic(team, ev)]
        assert a == b

    def test_unknown_reporter_rejected(self, demo_spec):
        team = team_state(demo_spec)
        ev = Event("PersonEnteredCar", location=(0.0, 0.0, 0.0), reporter="ghost")
        with pytest.raises(KeyError):
            step_strategic(team, ev)
