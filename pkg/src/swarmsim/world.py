"""Ground-truth kinematics: drone plant, scripted actors, wind, collisions.

Drones track commanded velocity first-order (time constant PlantParams.tau)
with wind added on top; persons and cars are kinematic stimulus that follow
their scripted tasks at constant speed with instant turns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .control import GlobalPosition, LocalPosition, LocalVelocity, Setpoint
from .geometry import Pose, Vec3, body_to_world, clamp, relative_spherical, wrap_angle

if TYPE_CHECKING:
    from .scenario import ScriptedAction


class EntityKind(Enum):
    PERSON = "person"
    CAR = "car"
    DRONE = "drone"
    BASE_STATION = "basestation"
    OBSTACLE = "obstacle"


@dataclass(frozen=True)
class WindField:
    """Uniform-in-space wind: mean vector plus a sinusoidal gust along it."""

    mean: tuple[float, float] = (0.0, 0.0)
    gust_amplitude: float = 0.0
    gust_period: float = 10.0


def wind_at(field: WindField, time: float) -> tuple[float, float]:
    """Wind vector at a sim time: mean + amplitude*sin(2*pi*t/period) along
    the mean's unit direction. A zero-mean field has no direction and
    contributes nothing."""
    mx, my = field.mean
    mag = math.hypot(mx, my)
    if mag == 0.0:
        return (0.0, 0.0)
    gust = field.gust_amplitude * math.sin(2.0 * math.pi * time / field.gust_period)
    k = (mag + gust) / mag
    return (mx * k, my * k)


@dataclass(frozen=True)
class PlantParams:
    tau: float = 0.5  # velocity-tracking time constant, s
    max_yaw_rate: float = 2.5  # rad/s
    position_gain: float = 1.5  # 1/s, approach gain for position setpoints
    drone_collision_radius: float = 2.0
    obstacle_collision_radius: float = 1.0
    enter_radius: float = 2.0  # person must be this close to board a car
    exit_offset: float = 1.5  # lateral offset applied when leaving a car
    car_stopped_speed: float = 0.3  # exit is deferred until slower than this


@dataclass
class ActorTask:
    kind: str  # "walk" | "drive"
    route: list[tuple[float, float]]
    speed: float
    index: int = 0


@dataclass
class EntityState:
    pose: Pose
    velocity: Vec3
    kind: EntityKind
    max_speed: float = 0.0
    carried_by: str | None = None
    task: ActorTask | None = None


@dataclass
class WorldState:
    time: float = 0.0
    entities: dict[str, EntityState] = field(default_factory=dict)
    wind: WindField = WindField()
    pending_script: list["ScriptedAction"] = field(default_factory=list)
    waiting: list["ScriptedAction"] = field(default_factory=list)
    collision_log: list[tuple[float, str, str]] = field(default_factory=list)
    fired_events: set[str] = field(default_factory=set)
    _colliding: set[tuple[str, str]] = field(default_factory=set)


def ground_truth_relative(
    state: WorldState, observer: str, target: str
) -> tuple[float, float, float]:
    """(range, bearing, elevation) of target from the observer drone."""
    try:
        obs = state.entities[observer]
        tgt = state.entities[target]
    except KeyError as exc:
        raise KeyError(f"unknown entity id: {exc.args[0]}") from None
    if obs.kind is not EntityKind.DRONE:
        raise ValueError(f"observer {observer} is not a drone")
    return relative_spherical(obs.pose, tgt.pose.position)


def _apply_action(state: WorldState, action: "ScriptedAction", params: PlantParams) -> bool:
    """Apply one scripted action. Returns False if it must wait (proximity or
    stop preconditions not yet met)."""
    ent = state.entities[action.entity]
    name = action.action
    if name == "walkto":
        ent.task = ActorTask("walk", [action.point], action.speed)
    elif name == "driveroute":
        ent.task = ActorTask("drive", list(action.route), action.speed)
    elif name == "entercar":
        car = state.entities[action.target]
        d = math.hypot(car.pose.x - ent.pose.x, car.pose.y - ent.pose.y)
        if d > params.enter_radius:
            return False
        ent.carried_by = action.target
        ent.task = None
        ent.velocity = Vec3()
    elif name == "exitcar":
        if ent.carried_by is None:
            return True  # nothing to exit; swallow
        car = state.entities[ent.carried_by]
        if car.velocity.norm2d() >= params.car_stopped_speed:
            return False
        off = body_to_world(car.pose.yaw, 0.0, params.exit_offset)
        ent.carried_by = None
        ent.pose = Pose(car.pose.x + off[0], car.pose.y + off[1], 0.0, car.pose.yaw)
        ent.velocity = Vec3()
    elif name == "stopcar":
        ent.task = None
        ent.velocity = Vec3()
    elif name == "idle":
        ent.task = None
        ent.velocity = Vec3()
    else:
        raise ValueError(f"unknown scripted action: {name}")
    return True


def _run_script(state: WorldState, params: PlantParams) -> None:
    due: list["ScriptedAction"] = []
    rest: list["ScriptedAction"] = []
    for act in state.pending_script:
        if act.trigger is not None:
            (due if act.trigger in state.fired_events else rest).append(act)
        elif act.at_time <= state.time + 1e-9:
            due.append(act)
        else:
            rest.append(act)
    state.pending_script = rest
    still_waiting: list["ScriptedAction"] = []
    for act in state.waiting + due:
        if not _apply_action(state, act, params):
            still_waiting.append(act)
    state.waiting = still_waiting


def _step_actor(ent: EntityState, dt: float) -> None:
    task = ent.task
    if task is None:
        return
    tx, ty = task.route[task.index]
    dx, dy = tx - ent.pose.x, ty - ent.pose.y
    d = math.hypot(dx, dy)
    step = task.speed * dt
    if d <= step:
        ent.pose = Pose(tx, ty, ent.pose.z, ent.pose.yaw if d == 0 else math.atan2(dy, dx))
        task.index += 1
        if task.index >= len(task.route):
            ent.task = None
            ent.velocity = Vec3()
        return
    yaw = math.atan2(dy, dx)
    ent.velocity = Vec3(task.speed * dx / d, task.speed * dy / d, 0.0)
    ent.pose = Pose(ent.pose.x + ent.velocity.x * dt, ent.pose.y + ent.velocity.y * dt, ent.pose.z, yaw)


def _drone_command(
    ent: EntityState, sp: Setpoint | None, dt: float, params: PlantParams
) -> tuple[Vec3, float]:
    """Translate a setpoint into (commanded world velocity, target yaw)."""
    pose = ent.pose
    if sp is None:
        return Vec3(), pose.yaw
    if isinstance(sp, LocalVelocity):
        wx, wy = body_to_world(pose.yaw, sp.vx, sp.vy)
        # Setpoint yaw rate is clockwise-positive (flight-controller NED
        # convention); world yaw is CCW-positive.
        return Vec3(wx, wy, sp.vz), wrap_angle(pose.yaw - sp.yaw_rate * dt)
    if isinstance(sp, LocalPosition):
        wx, wy = body_to_world(pose.yaw, sp.dx, sp.dy)
        v = Vec3(wx / dt, wy / dt, sp.dz / dt).clamped(ent.max_speed)
        return v, wrap_angle(pose.yaw + sp.dyaw)
    if isinstance(sp, GlobalPosition):
        delta = Vec3(sp.x - pose.x, sp.y - pose.y, sp.z - pose.z)
        cap = ent.max_speed if sp.speed is None else min(sp.speed, ent.max_speed)
        v = delta.scaled(params.position_gain).clamped(cap)
        return v, sp.yaw
    raise TypeError(f"not a setpoint: {sp!r}")


def step_world(
    state: WorldState,
    setpoints: dict[str, Setpoint],
    dt: float,
    params: PlantParams = PlantParams(),
    fired_events: set[str] | None = None,
) -> WorldState:
    """Advance the world by dt under the given drone setpoints."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    for did in setpoints:
        if state.entities[did].kind is not EntityKind.DRONE:
            raise ValueError(f"setpoint for non-drone entity: {did}")
    if fired_events:
        state.fired_events |= fired_events
    _run_script(state, params)

    wx, wy = wind_at(state.wind, state.time)
    alpha = min(1.0, dt / params.tau)
    for eid in sorted(state.entities):
        ent = state.entities[eid]
        if ent.kind is EntityKind.DRONE:
            v_cmd, yaw_t = _drone_command(ent, setpoints.get(eid), dt, params)
            vel = Vec3(
                ent.velocity.x + (v_cmd.x - ent.velocity.x) * alpha,
                ent.velocity.y + (v_cmd.y - ent.velocity.y) * alpha,
                ent.velocity.z + (v_cmd.z - ent.velocity.z) * alpha,
            ).clamped(ent.max_speed)
            airborne = ent.pose.z > 0.05 or vel.z > 0.0
            gx = vel.x + (wx if airborne else 0.0)
            gy = vel.y + (wy if airborne else 0.0)
            if not airborne:
                vel = Vec3()
                gx = gy = 0.0
            z = max(0.0, ent.pose.z + vel.z * dt)
            dyaw = clamp(wrap_angle(yaw_t - ent.pose.yaw), -params.max_yaw_rate * dt, params.max_yaw_rate * dt)
            ent.velocity = vel
            ent.pose = Pose(ent.pose.x + gx * dt, ent.pose.y + gy * dt, z, wrap_angle(ent.pose.yaw + dyaw))
        elif ent.carried_by is None:
            _step_actor(ent, dt)

    # Carried entities track their carrier exactly, after carriers moved.
    for eid in sorted(state.entities):
        ent = state.entities[eid]
        if ent.carried_by is not None:
            carrier = state.entities[ent.carried_by]
            ent.pose = carrier.pose
            ent.velocity = carrier.velocity

    _log_collisions(state, params)
    state.time += dt
    return state


def _log_collisions(state: WorldState, params: PlantParams) -> None:
    drones = [eid for eid in sorted(state.entities) if state.entities[eid].kind is EntityKind.DRONE]
    obstacles = [
        eid for eid in sorted(state.entities) if state.entities[eid].kind is EntityKind.OBSTACLE
    ]
    for i, a in enumerate(drones):
        pa = state.entities[a].pose.position
        for b in drones[i + 1 :]:
            _check_pair(state, a, b, pa, state.entities[b].pose.position, params.drone_collision_radius)
        for b in obstacles:
            _check_pair(state, a, b, pa, state.entities[b].pose.position, params.obstacle_collision_radius)


def _check_pair(state: WorldState, a: str, b: str, pa: Vec3, pb: Vec3, radius: float) -> None:
    key = (a, b)
    d = math.sqrt((pb.x - pa.x) ** 2 + (pb.y - pa.y) ** 2 + (pb.z - pa.z) ** 2)
    if d < radius:
        if key not in state._colliding:
            state._colliding.add(key)
            state.collision_log.append((state.time, a, b))
    elif d > radius + 0.1:
        state._colliding.discard(key)
