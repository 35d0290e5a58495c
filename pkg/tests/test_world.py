import copy
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsim.control import GlobalPosition, LocalPosition, LocalVelocity
from swarmsim.geometry import Pose, Vec3
from swarmsim.scenario import ScriptedAction
from swarmsim.world import (
    EntityKind,
    PlantParams,
    WindField,
    ground_truth_relative,
    step_world,
    wind_at,
)

from conftest import BASE, CAR, DRONE, OBSTACLE, PERSON, make_world


class TestWind:
    def test_zero_field(self):
        f = WindField(mean=(0.0, 0.0), gust_amplitude=0.0)
        for t in (0.0, 1.0, 7.5, 100.0):
            assert wind_at(f, t) == (0.0, 0.0)

    def test_quarter_period_peak(self):
        f = WindField(mean=(2.0, 0.0), gust_amplitude=1.0, gust_period=10.0)
        wx, wy = wind_at(f, 2.5)
        assert wx == pytest.approx(3.0)
        assert wy == pytest.approx(0.0)

    def test_zero_phase(self):
        f = WindField(mean=(2.0, 0.0), gust_amplitude=1.0, gust_period=10.0)
        wx, wy = wind_at(f, 0.0)
        assert wx == pytest.approx(2.0)
        assert wy == pytest.approx(0.0)

    def test_gust_rides_mean_direction(self):
        f = WindField(mean=(3.0, 4.0), gust_amplitude=2.0, gust_period=8.0)
        wx, wy = wind_at(f, 2.0)  # sin(pi/2) = 1 -> magnitude 7 along (3,4)/5
        assert (wx, wy) == pytest.approx((3.0 * 7 / 5, 4.0 * 7 / 5))


class TestDronePlant:
    def test_straight_line_velocity_tracking(self):
        # First-order gain 1: tau equal to dt reaches the setpoint in one step.
        w = make_world({"d1": (DRONE, (0, 0, 10, 0), 5.0)})
        params = PlantParams(tau=1.0)
        step_world(w, {"d1": LocalVelocity(vx=1.0)}, dt=1.0, params=params)
        assert w.entities["d1"].pose.x == pytest.approx(1.0, abs=0.05)
        assert w.entities["d1"].pose.y == pytest.approx(0.0)

    def test_local_position_moves_body_frame(self):
        w = make_world({"d1": (DRONE, (0, 0, 10, math.pi / 2), 8.0)})
        for _ in range(40):
            step_world(w, {"d1": LocalPosition(dx=0.2)}, dt=0.05)
        # Forward at yaw pi/2 is +y.
        assert w.entities["d1"].pose.y > 5.0
        assert abs(w.entities["d1"].pose.x) < 0.5

    def test_global_position_approach_and_yaw(self):
        w = make_world({"d1": (DRONE, (0, 0, 10, 0), 8.0)})
        for _ in range(200):
            step_world(w, {"d1": GlobalPosition(30, 0, 10, 0.0)}, dt=0.05)
        assert w.entities["d1"].pose.x == pytest.approx(30.0, abs=1.0)

    def test_yaw_rate_is_clockwise_positive(self):
        w = make_world({"d1": (DRONE, (0, 0, 10, 0), 5.0)})
        step_world(w, {"d1": LocalVelocity(yaw_rate=1.0)}, dt=0.1)
        assert w.entities["d1"].pose.yaw < 0  # NED-style: positive rate turns right

    def test_setpoint_for_non_drone_rejected(self):
        w = make_world({"p1": (PERSON, (0, 0, 0, 0), 1.5)})
        with pytest.raises(ValueError, match="non-drone"):
            step_world(w, {"p1": LocalVelocity(vx=1.0)}, dt=0.1)

    def test_grounded_drone_does_not_drift_in_wind(self):
        w = make_world({"d1": (DRONE, (0, 0, 0, 0), 5.0)}, wind=WindField(mean=(5.0, 0.0)))
        for _ in range(20):
            step_world(w, {}, dt=0.05)
        assert w.entities["d1"].pose.x == pytest.approx(0.0)


class TestScriptedActors:
    def test_walkto_reaches_target(self):
        w = make_world({"p1": (PERSON, (0, 0, 0, 0), 1.5)})
        w.pending_script = [ScriptedAction("p1", "walkto", at_time=0.0, point=(10.0, 0.0), speed=1.0)]
        for _ in range(210):
            step_world(w, {}, dt=0.05)
        p = w.entities["p1"].pose
        assert math.hypot(p.x - 10.0, p.y) <= 0.1

    def test_carried_person_tracks_car_exactly(self):
        # Oracle: replay the script and assert pose equality at every step.
        w = make_world(
            {"p1": (PERSON, (10, 0, 0, 0), 1.5), "c1": (CAR, (10, 0, 0, 0), 8.0)}
        )
        w.pending_script = [
            ScriptedAction("p1", "entercar", at_time=0.0, target="c1"),
            ScriptedAction("c1", "driveroute", at_time=0.5, speed=4.0, route=((30.0, 0.0), (30.0, 15.0))),
        ]
        for _ in range(240):
            step_world(w, {}, dt=0.05)
            p, c = w.entities["p1"], w.entities["c1"]
            if p.carried_by:
                assert p.pose == c.pose
        assert w.entities["c1"].pose.x == pytest.approx(30.0, abs=0.2)
        assert w.entities["c1"].pose.y == pytest.approx(15.0, abs=0.2)
        assert w.entities["p1"].pose == w.entities["c1"].pose

    def test_entercar_defers_until_close(self):
        w = make_world(
            {"p1": (PERSON, (0, 0, 0, 0), 1.5), "c1": (CAR, (20, 0, 0, 0), 8.0)}
        )
        w.pending_script = [
            ScriptedAction("p1", "entercar", at_time=0.0, target="c1"),
            ScriptedAction("p1", "walkto", at_time=0.0, point=(20.0, 0.0), speed=2.0),
        ]
        step_world(w, {}, dt=0.05)
        assert w.entities["p1"].carried_by is None  # too far, waits
        for _ in range(20 * 11):
            step_world(w, {}, dt=0.05)
        assert w.entities["p1"].carried_by == "c1"

    def test_exitcar_offsets_and_frees(self):
        w = make_world(
            {"p1": (PERSON, (5, 0, 0, 0), 1.5), "c1": (CAR, (5, 0, 0, 0), 8.0)}
        )
        w.pending_script = [
            ScriptedAction("p1", "entercar", at_time=0.0, target="c1"),
            ScriptedAction("p1", "exitcar", at_time=0.5),
        ]
        for _ in range(30):
            step_world(w, {}, dt=0.05)
        p = w.entities["p1"]
        assert p.carried_by is None
        assert 0.5 < math.hypot(p.pose.x - 5.0, p.pose.y) <= 2.0


class TestRelativeGeometry:
    def test_dead_ahead(self):
        w = make_world({"d1": (DRONE, (0, 0, 0, 0), 5.0), "p1": (PERSON, (10, 0, 0, 0), 1.5)})
        rng, bearing, elev = ground_truth_relative(w, "d1", "p1")
        assert (rng, bearing, elev) == pytest.approx((10.0, 0.0, 0.0))

    def test_yaw_rotates_frame(self):
        w = make_world({"d1": (DRONE, (0, 0, 0, math.pi / 2), 5.0), "p1": (PERSON, (10, 0, 0, 0), 1.5)})
        _, bearing, _ = ground_truth_relative(w, "d1", "p1")
        assert bearing == pytest.approx(-math.pi / 2)

    def test_elevation_straight_down(self):
        w = make_world({"d1": (DRONE, (0, 0, 5, 0), 5.0), "p1": (PERSON, (0, 0, 0, 0), 1.5)})
        rng, _, elev = ground_truth_relative(w, "d1", "p1")
        assert rng == pytest.approx(5.0)
        assert elev == pytest.approx(-math.pi / 2)

    def test_unknown_id(self):
        w = make_world({"d1": (DRONE, (0, 0, 0, 0), 5.0)})
        with pytest.raises(KeyError):
            ground_truth_relative(w, "d1", "nope")

    def test_observer_must_be_drone(self):
        w = make_world({"p1": (PERSON, (0, 0, 0, 0), 1.0), "d1": (DRONE, (1, 0, 0, 0), 5.0)})
        with pytest.raises(ValueError):
            ground_truth_relative(w, "p1", "d1")


class TestDeterminismAndSafety:
    def _run(self, seed_pose):
        w = make_world({"d1": (DRONE, seed_pose, 8.0)}, wind=WindField(mean=(1.0, 0.5), gust_amplitude=0.5))
        out = []
        for i in range(100):
            step_world(w, {"d1": LocalVelocity(vx=2.0, yaw_rate=0.3)}, dt=0.05)
            p = w.entities["d1"].pose
            out.append((p.x, p.y, p.z, p.yaw))
        return out

    def test_bit_identical_across_runs(self):
        assert self._run((0, 0, 10, 0.2)) == self._run((0, 0, 10, 0.2))

    @given(
        vx=st.floats(-8, 8, allow_nan=False),
        vy=st.floats(-8, 8, allow_nan=False),
        yaw=st.floats(-3, 3, allow_nan=False),
    )
    @settings(max_examples=40, deadline=None)
    def test_no_energy_free_teleportation(self, vx, vy, yaw):
        wind = WindField(mean=(2.0, 1.0), gust_amplitude=1.0, gust_period=5.0)
        w = make_world({"d1": (DRONE, (0, 0, 10, yaw), 8.0)}, wind=wind)
        dt = 0.05
        for _ in range(30):
            before = w.entities["d1"].pose
            step_world(w, {"d1": LocalVelocity(vx=vx, vy=vy)}, dt=dt)
            after = w.entities["d1"].pose
            moved = math.dist((before.x, before.y, before.z), (after.x, after.y, after.z))
            max_wind = math.hypot(2.0, 1.0) + 1.0
            assert moved <= (8.0 + max_wind) * dt + 1e-6

    def test_collision_log_edge_triggered_and_ordered(self):
        w = make_world(
            {"d1": (DRONE, (0, 0, 10, 0), 8.0), "d2": (DRONE, (10, 0, 10, 0), 8.0)}
        )
        # Fly d2 through d1 and out again.
        for _ in range(200):
            step_world(w, {"d2": LocalVelocity(vx=-2.0)}, dt=0.05)
        assert len(w.collision_log) == 1
        times = [t for t, _, _ in w.collision_log]
        assert times == sorted(times)

    def test_obstacle_collision_radius(self):
        w = make_world(
            {"d1": (DRONE, (0, 0, 0.5, 0), 8.0), "rock": (OBSTACLE, (3, 0, 0, 0), 0.0)}
        )
        for _ in range(100):
            step_world(w, {"d1": LocalVelocity(vx=1.0)}, dt=0.05)
        assert any("rock" in pair for _, _, pair in w.collision_log) or any(
            b == "rock" for _, _, b in w.collision_log
        )
