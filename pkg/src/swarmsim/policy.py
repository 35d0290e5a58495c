"""Multi-layer policy: per-agent operational state machine, group tactical
coordination, and team strategic responses.

Operational states form a set (a drone can be active in several at once,
subject to exclusion rules). Commands arriving on the inbox take precedence
over autonomous transitions. Landing authority follows the dual rule: a
strategic/GCS LAND is unilateral, while peer confirmations (LAND_VOTE) must
reach a quorum of 2 before a drone autonomously lands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .control import (
    FollowParams,
    GlobalPosition,
    LocalVelocity,
    Setpoint,
    TrackParams,
    follow_control,
    navigate_control,
    reached,
    search_control,
    track_control,
)
from .geometry import Pose, wrap_angle
from .network import Address, Command, Event, Priority, SwarmMessage
from .perception import TargetLock, TargetObservation, update_lock
from .scenario import (
    ROLE_HANDOFF_FOLLOW,
    ROLE_SEARCH_FOLLOW,
    ROLE_TRACK_VEHICLE,
    PolicyBundle,
    StrategicRule,
)

EVT_PERSON_ENTERED_CAR = "PersonEnteredCar"
EVT_PERSON_EXITED_CAR = "PersonExitedCar"
EVT_TARGET_FOUND = "TargetFound"
EVT_TARGET_LOST = "TargetLost"


class OpState(Enum):
    IDLE_SLEEPING = "IdleSleeping"
    TAKEOFF = "Takeoff"
    LANDING = "Landing"
    SEARCHING = "Searching"
    FOLLOWING = "Following"
    TRACKING = "Tracking"
    NAVIGATING = "NavigatingToGPS"
    RETURNING = "ReturningToBase"


_EXCLUSIVE_ENGAGE = {OpState.SEARCHING, OpState.FOLLOWING, OpState.TRACKING}


def member_altitude(params) -> float:
    """Assigned cruise altitude: swarm-mates are staggered vertically so the
    2 m collision sphere can never be breached by same-task traffic."""
    return params.altitude + params.member_index * params.alt_stagger


def slant_range(horizontal_standoff: float, altitude: float) -> float:
    """Slant-range equivalent of a horizontal standoff at a given altitude
    (targets are on the ground; sensors measure slant range)."""
    return math.hypot(horizontal_standoff, altitude)


def op_state_violations(active: set[OpState]) -> list[str]:
    """Exclusion rules over the operational state set."""
    out = []
    if OpState.TAKEOFF in active and OpState.LANDING in active:
        out.append("Takeoff and Landing are mutually exclusive")
    if OpState.IDLE_SLEEPING in active and len(active) > 1:
        out.append("IdleSleeping excludes all other states")
    if len(active & _EXCLUSIVE_ENGAGE) > 1:
        out.append("at most one of Searching/Following/Tracking may be active")
    return out


@dataclass
class BehaviorDetectorState:
    """Pattern detector for person/car complex behaviors.

    Enter: person and car co-located for the confirm window, then the person
    vanishes (without first being seen away from the car) while the car stays
    observed. Exit: a car this detector has seen moving comes to a confirmed
    stop, then a person appears out of nowhere next to it.

    Detection draws are Bernoulli, so individual sightings flicker; presence
    is therefore tracked with last-seen timestamps and short grace gaps
    rather than demanding unbroken tick-by-tick contact.
    """

    proximity_eps: float = 3.0
    confirm_window: float = 2.0
    stop_speed: float = 0.3
    person_grace: float = 1.0  # sighting gap that still counts as present
    car_grace: float = 1.5
    person_near_car_since: float | None = None  # co-location streak start
    person_missing_since: float | None = None  # absence streak start
    car_stopped_since: float | None = None
    enter_armed: bool = False
    car_was_moving: bool = False
    exit_blocked: bool = False
    last_near_at: float | None = None
    last_person_at: float | None = None
    last_car_at: float | None = None
    car_history: list[tuple[float, float, float]] = field(default_factory=list)


def detect_complex_behavior(
    det: BehaviorDetectorState, obs: list[TargetObservation], time: float
) -> Event | None:
    """Advance the detector one perception tick; returns at most one event.

    The detector resets its fired pattern after emission; re-arming requires
    the constituent conditions to establish themselves afresh.
    """
    persons = [o for o in obs if o.target_class == "Person"]
    cars = [o for o in obs if o.target_class == "Car"]
    car = cars[0] if cars else None

    if car is not None:
        det.last_car_at = time
        # Ground-speed estimate over a >=1.5 s baseline to ride out noise.
        cx, cy = car.geolocation[0], car.geolocation[1]
        det.car_history.append((time, cx, cy))
        det.car_history = [h for h in det.car_history if time - h[0] <= 3.0]
        baseline = None
        for h in det.car_history:
            if time - h[0] >= 1.5:
                baseline = h
        if baseline is not None:
            dt = time - baseline[0]
            speed = math.hypot(cx - baseline[1], cy - baseline[2]) / dt
            if speed > 3 * det.stop_speed:
                det.car_was_moving = True
                det.car_stopped_since = None
            elif speed < det.stop_speed:
                if det.car_stopped_since is None:
                    det.car_stopped_since = time
            else:
                det.car_stopped_since = None

    # Proximity is judged against the car's remembered position when the car
    # misses its own detection draw this frame; a person sighted alone with
    # no recent car fix proves nothing about separation.
    car_ref: tuple[float, float] | None = None
    if car is not None:
        car_ref = (car.geolocation[0], car.geolocation[1])
    elif det.car_history and time - det.car_history[-1][0] <= det.car_grace:
        h = det.car_history[-1]
        car_ref = (h[1], h[2])
    near: list[TargetObservation] = []
    far = False
    if persons and car_ref is not None:
        for p in persons:
            d = math.hypot(p.geolocation[0] - car_ref[0], p.geolocation[1] - car_ref[1])
            if d <= det.proximity_eps:
                near.append(p)
            else:
                far = True

    car_present = det.last_car_at is not None and time - det.last_car_at <= det.car_grace
    event: Event | None = None

    if far and not near:
        # A person confirmed away from the car disarms the enter pattern and
        # re-arms the exit pattern once they have cleared the car.
        det.person_near_car_since = None
        det.enter_armed = False
        det.exit_blocked = False
        det.person_missing_since = None
    elif near:
        appeared = det.last_person_at is None or time - det.last_person_at >= det.person_grace
        if det.person_near_car_since is None:
            det.person_near_car_since = time
        det.last_near_at = time
        det.person_missing_since = None
        if time - det.person_near_car_since >= det.confirm_window:
            det.enter_armed = True
        stopped_confirmed = (
            det.car_stopped_since is not None
            and time - det.car_stopped_since >= det.confirm_window
        )
        if stopped_confirmed and det.car_was_moving and appeared and not det.exit_blocked:
            event = Event(EVT_PERSON_EXITED_CAR, location=near[0].geolocation)
            det.exit_blocked = True
            det.enter_armed = False
            det.person_near_car_since = None
    else:
        # No person sighted this tick. Short gaps keep the co-location streak
        # alive; a long gap while the car stays observed is the enter cue.
        if (
            det.person_near_car_since is not None
            and det.last_near_at is not None
            and time - det.last_near_at > det.person_grace
        ):
            det.person_near_car_since = None
        no_person = det.last_person_at is None or time - det.last_person_at > det.person_grace
        if det.enter_armed and no_person and car_present:
            if det.person_missing_since is None:
                det.person_missing_since = time
            elif time - det.person_missing_since >= det.confirm_window:
                last = det.car_history[-1] if det.car_history else None
                loc = car.geolocation if car else ((last[1], last[2], 0.0) if last else None)
                event = Event(EVT_PERSON_ENTERED_CAR, location=loc)
                det.enter_armed = False
                det.person_missing_since = None
                det.person_near_car_since = None
        elif not car_present:
            det.person_missing_since = None
        det.exit_blocked = False

    if persons:
        det.last_person_at = time
    return event


@dataclass
class DronePolicyState:
    drone_id: str
    bundle: PolicyBundle
    home: tuple[float, float, float]
    op: set[OpState] = field(default_factory=lambda: {OpState.IDLE_SLEEPING})
    lock: TargetLock = field(default_factory=TargetLock)
    waypoint_progress: int = 0
    endurance_remaining: float = 600.0
    pending_outbox: list[SwarmMessage] = field(default_factory=list)
    detector: BehaviorDetectorState = field(default_factory=BehaviorDetectorState)
    # runtime
    armed: bool = False
    took_off: bool = False
    goto_target: tuple[float, float, float] | None = None
    engage_mode: str | None = None  # TRACK | FOLLOW | SEARCH
    hint: tuple[float, float, float] | None = None
    loiter_pattern: tuple[tuple[float, float], ...] = ()
    latest_obs: list[TargetObservation] = field(default_factory=list)
    land_votes: set[str] = field(default_factory=set)
    voted_land: bool = False
    land_ordered: bool = False
    goto_arrived: bool = False
    ever_locked: bool = False
    hint_face_until: float = 0.0
    last_lock_obs: TargetObservation | None = None  # freshest sighting of the lock
    log_notes: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.waypoint_progress = self.bundle.operational.search_start_index
        self.endurance_remaining = self.bundle.operational.endurance
        det = self.detector
        self.detector = BehaviorDetectorState(
            proximity_eps=det.proximity_eps,
            confirm_window=det.confirm_window,
            stop_speed=det.stop_speed,
            person_grace=det.person_grace,
            car_grace=det.car_grace,
        )


def _locked_obs(ps: DronePolicyState) -> TargetObservation | None:
    if ps.lock.locked_id is None:
        return None
    for o in ps.latest_obs:
        if o.observed_id == ps.lock.locked_id:
            return o
    return None


def _reckoned_obs(ps: DronePolicyState, pose: Pose) -> TargetObservation | None:
    """The locked target's last sighting, dead-reckoned against own motion.

    Observations refresh at the perception rate while control runs at the
    physics rate; replaying a stale bearing against the current yaw would
    integrate it like a rate command. Recomputing range/bearing from the
    cached geolocation keeps the engagement laws stable between refreshes.
    """
    if ps.lock.locked_id is None or ps.last_lock_obs is None:
        return None
    from dataclasses import replace as _replace

    geo = ps.last_lock_obs.geolocation
    dx, dy, dz = geo[0] - pose.x, geo[1] - pose.y, geo[2] - pose.z
    horiz = math.hypot(dx, dy)
    rng = max(0.05, math.hypot(horiz, dz))
    bearing = wrap_angle(math.atan2(dy, dx) - pose.yaw)
    fov = ps.bundle.operational.fov
    cx = min(1.0, max(0.0, 0.5 + bearing / fov))
    bbox = (cx,) + ps.last_lock_obs.bbox[1:]
    return _replace(ps.last_lock_obs, range=rng, bearing=bearing, bbox=bbox)


def _order_land(ps: DronePolicyState, grounded: bool) -> None:
    ps.land_ordered = True
    ps.lock = TargetLock()
    ps.last_lock_obs = None
    ps.goto_target = None
    ps.engage_mode = None
    if grounded:
        ps.op = {OpState.IDLE_SLEEPING}
    else:
        ps.op = {OpState.RETURNING}


def observe_terminal_event(ps: DronePolicyState, kind: str, time: float) -> None:
    """A member that learns its group's terminal condition votes to land.

    Its own knowledge does not count toward its quorum; only LAND_VOTE
    messages received from distinct peers do ("from both peers").
    """
    if kind != ps.bundle.tactical.terminal_event:
        return
    if not ps.voted_land:
        ps.voted_land = True
        ps.pending_outbox.append(
            SwarmMessage(
                priority=Priority.TACTICAL,
                sender=ps.drone_id,
                to=Address.swarm(ps.bundle.swarm_id),
                payload=Command("LAND_VOTE"),
                sent_at=time,
            )
        )


def _handle_inbox(
    ps: DronePolicyState, pose: Pose, inbox: list[SwarmMessage], time: float
) -> None:
    grounded = pose.z <= 0.05
    for msg in inbox:
        pl = msg.payload
        if isinstance(pl, Event):
            observe_terminal_event(ps, pl.kind, time)
            continue
        name = pl.name
        if name in ("ARM", "TAKEOFF"):
            ps.armed = True
            ps.land_ordered = False
            if pl.point is not None:
                ps.goto_target = pl.point
                ps.goto_arrived = False
            if pl.mode is not None:
                ps.engage_mode = pl.mode
            if pl.hint is not None:
                ps.hint = pl.hint
            if grounded:
                ps.op = {OpState.TAKEOFF}
            elif ps.goto_target is not None:
                ps.op = {OpState.NAVIGATING}
        elif name == "LAND" or name == "RTB":
            _order_land(ps, grounded)
        elif name == "LAND_VOTE":
            ps.land_votes.add(msg.sender)
            if len(ps.land_votes) >= ps.bundle.tactical.land_quorum:
                _order_land(ps, grounded)
        elif name == "GOTO":
            if ps.op & {OpState.FOLLOWING, OpState.TRACKING} and ps.lock.locked_id:
                continue  # already engaged on a target of our own
            if pl.point is None:
                raise ValueError("GOTO without a waypoint")
            ps.goto_target = pl.point
            ps.goto_arrived = False
            if not grounded:
                ps.op = {OpState.NAVIGATING}
            elif ps.armed and not ps.land_ordered:
                ps.op = {OpState.TAKEOFF}
        elif name == "TRACK":
            ps.engage_mode = "TRACK"
            if pl.hint is not None:
                ps.hint = pl.hint
        elif name == "FOLLOW":
            ps.engage_mode = "FOLLOW"
            if pl.hint is not None:
                ps.hint = pl.hint
        else:
            ps.log_notes.append(("Ignored", f"cmd {name}"))
    # Takeoff with no pending order is meaningless for a landed drone.
    if ps.land_ordered and not grounded and not ps.op & {OpState.RETURNING, OpState.LANDING}:
        ps.op = {OpState.RETURNING}


def _perception_update(
    ps: DronePolicyState, obs: list[TargetObservation], time: float
) -> list[Event]:
    """Refresh the target lock from fresh observations; report transitions."""
    events: list[Event] = []
    params = ps.bundle.operational
    ps.latest_obs = obs
    if not ps.op & (_EXCLUSIVE_ENGAGE | {OpState.NAVIGATING}):
        return events
    before = ps.lock
    ps.lock = update_lock(ps.lock, obs, params.wanted_class, time, params.lock_timeout)
    fresh = _locked_obs(ps)
    if fresh is not None:
        ps.last_lock_obs = fresh
    if before.locked_id is None and ps.lock.locked_id is not None:
        ps.ever_locked = True
        o = _locked_obs(ps)
        loc = o.geolocation if o else None
        events.append(
            Event(EVT_TARGET_FOUND, location=loc, target_class=params.wanted_class)
        )
        ps.log_notes.append(("Lock", f"+ {params.wanted_class} {ps.lock.locked_id}"))
        # A commanded GOTO leg is flown to its end; only an open-ended search
        # is preempted by acquisition.
        if OpState.SEARCHING in ps.op and ps.bundle.role != ROLE_TRACK_VEHICLE:
            ps.op.discard(OpState.SEARCHING)
            ps.op.add(OpState.FOLLOWING)
    elif before.locked_id is not None and ps.lock.locked_id is None:
        ps.last_lock_obs = None
        events.append(Event(EVT_TARGET_LOST, target_class=params.wanted_class))
        ps.log_notes.append(("Lock", f"- {params.wanted_class} {before.locked_id}"))
        if OpState.FOLLOWING in ps.op:
            ps.op.discard(OpState.FOLLOWING)
            ps.op.add(OpState.SEARCHING)
    return events


def step_operational(
    ps: DronePolicyState,
    pose: Pose,
    obs: list[TargetObservation] | None,
    inbox: list[SwarmMessage],
    time: float,
    dt: float,
) -> tuple[Setpoint | None, list[Event]]:
    """One control tick: inbox first (commands win), then lock upkeep on
    perception ticks, then the active-state controller dispatch.

    Returns (setpoint, locally-observed events for the tactical layer);
    outgoing messages accumulate on ps.pending_outbox.
    """
    params = ps.bundle.operational
    grounded = pose.z <= 0.05
    airborne = not grounded

    if airborne:
        ps.endurance_remaining = max(0.0, ps.endurance_remaining - dt)
        if (
            ps.endurance_remaining < params.return_margin
            and not ps.op & {OpState.RETURNING, OpState.LANDING}
        ):
            ps.log_notes.append(("Endurance", "low, forcing return"))
            _order_land(ps, grounded)

    _handle_inbox(ps, pose, inbox, time)
    events = _perception_update(ps, obs, time) if obs is not None else []

    setpoint: Setpoint | None = None
    alt = member_altitude(params)

    if OpState.IDLE_SLEEPING in ps.op:
        return None, events

    if OpState.TAKEOFF in ps.op:
        ps.took_off = True
        if pose.z < alt - 0.5:
            return LocalVelocity(vz=params.climb_rate), events
        ps.op.discard(OpState.TAKEOFF)
        if ps.goto_target is not None:
            ps.op.add(OpState.NAVIGATING)
        elif ps.bundle.role == ROLE_SEARCH_FOLLOW and params.search_pattern:
            ps.op.add(OpState.SEARCHING)
        elif params.station is not None:
            ps.goto_target = (params.station[0], params.station[1], alt)
            ps.op.add(OpState.NAVIGATING)
        else:
            ps.goto_target = (pose.x, pose.y, alt)
            ps.op.add(OpState.NAVIGATING)

    if OpState.LANDING in ps.op:
        if grounded:
            ps.op = {OpState.IDLE_SLEEPING}
            ps.armed = False
            ps.log_notes.append(("Landed", f"at {pose.x:.1f},{pose.y:.1f}"))
            return None, events
        return LocalVelocity(vz=-params.climb_rate), events

    if OpState.RETURNING in ps.op:
        goal = (ps.home[0], ps.home[1], alt)
        if reached(pose, goal, params.arrival_radius):
            ps.op.discard(OpState.RETURNING)
            ps.op.add(OpState.LANDING)
            ps.log_notes.append(("Arrival", "home"))
            return LocalVelocity(vz=-params.climb_rate), events
        return navigate_control(pose, goal, params.arrival_radius, params.cruise_speed), events

    if OpState.NAVIGATING in ps.op:
        raw = ps.goto_target or (pose.x, pose.y, alt)
        target = (raw[0], raw[1], alt)  # always fly at the assigned altitude
        if reached(pose, target, params.arrival_radius):
            if not ps.goto_arrived:
                ps.goto_arrived = True
                ps.log_notes.append(("Arrival", f"goto {target[0]:.1f},{target[1]:.1f}"))
            mode = ps.engage_mode
            if mode == "TRACK":
                ps.op.discard(OpState.NAVIGATING)
                ps.op.add(OpState.TRACKING)
                ps.hint_face_until = time + 5.0
            elif mode in ("FOLLOW", "SEARCH") or ps.bundle.role == ROLE_SEARCH_FOLLOW:
                ps.op.discard(OpState.NAVIGATING)
                if ps.lock.locked_id is not None:
                    ps.op.add(OpState.FOLLOWING)
                else:
                    # Scan a small loiter square around the point until a
                    # target of the wanted class turns up.
                    ps.op.add(OpState.SEARCHING)
                    ps.loiter_pattern = _loiter_square(target, params.loiter_radius)
                    ps.waypoint_progress = 0
            else:
                # No follow-on directive: station-keep here.
                return GlobalPosition(target[0], target[1], target[2], pose.yaw), events
        else:
            return (
                navigate_control(pose, target, params.arrival_radius, params.cruise_speed),
                events,
            )

    if OpState.SEARCHING in ps.op:
        pattern = ps.loiter_pattern or params.search_pattern
        if not pattern:
            pattern = _loiter_square((pose.x, pose.y, alt), params.loiter_radius)
            ps.loiter_pattern = pattern
        sp, ps.waypoint_progress, arrived = search_control(
            list(pattern), ps.waypoint_progress, pose, alt, params.arrival_radius, params.cruise_speed
        )
        if arrived:
            ps.log_notes.append(("Arrival", f"waypoint {ps.waypoint_progress}"))
        return sp, events

    if OpState.FOLLOWING in ps.op:
        o = _reckoned_obs(ps, pose)
        if o is None:
            return GlobalPosition(pose.x, pose.y, alt, pose.yaw), events
        if ps.bundle.role == ROLE_HANDOFF_FOLLOW:
            fp = FollowParams(
                r0=slant_range(params.r0, alt),
                range_gain=1.0,
                max_follow_speed=params.follow_speed_cap,
            )
            return follow_control(o, fp, dt), events
        tp = TrackParams(
            d0=slant_range(params.d0, alt),
            distance_deadband=params.distance_deadband,
            center_threshold=params.center_threshold,
            yaw_gain=params.yaw_gain,
            approach_speed=params.approach_speed,
        )
        return track_control(o, tp), events

    if OpState.TRACKING in ps.op:
        station = params.station or (pose.x, pose.y)
        if ps.goto_target is not None:
            station = (ps.goto_target[0], ps.goto_target[1])
        o = _reckoned_obs(ps, pose)
        if o is not None:
            yaw_cmd = wrap_angle(pose.yaw + o.bearing)
        elif ps.hint is not None and not ps.ever_locked and time < ps.hint_face_until:
            yaw_cmd = math.atan2(ps.hint[1] - pose.y, ps.hint[0] - pose.x)
        else:
            # "Rotate around the own z-axis" scan until the target shows up.
            yaw_cmd = wrap_angle(pose.yaw + params.scan_rate * dt)
        return GlobalPosition(station[0], station[1], alt, yaw_cmd), events

    return setpoint, events


def _loiter_square(
    center: tuple[float, ...], radius: float
) -> tuple[tuple[float, float], ...]:
    cx, cy = center[0], center[1]
    r = radius
    return ((cx + r, cy), (cx, cy + r), (cx - r, cy), (cx, cy - r))


# ---------------------------------------------------------------------------
# Tactical layer


@dataclass
class TacticalState:
    swarm_id: str
    recent: dict[str, float] = field(default_factory=dict)


def step_tactical(
    tstate: TacticalState,
    group: list[DronePolicyState],
    events: list[tuple[str, Event]],
    time: float,
) -> tuple[list[SwarmMessage], list[Event]]:
    """Group coordination: dedup member reports within the window, convert
    target-found reports into GOTO for the other members, and pass complex
    behaviors up to the strategic layer.

    Returns (messages to send, events surviving dedup).
    """
    if not group:
        return [], []
    window = group[0].bundle.tactical.dedup_window
    converge = group[0].bundle.role != ROLE_TRACK_VEHICLE  # trackers hold station
    msgs: list[SwarmMessage] = []
    survivors: list[Event] = []
    for reporter, ev in sorted(events, key=lambda it: (it[1].kind, it[0])):
        last = tstate.recent.get(ev.kind)
        if last is not None and time - last < window:
            continue
        tstate.recent[ev.kind] = time
        ev = Event(ev.kind, ev.location, ev.target_class, reporter)
        survivors.append(ev)
        if ev.kind == EVT_TARGET_FOUND and ev.location is not None and converge:
            msgs.append(
                SwarmMessage(
                    priority=Priority.TACTICAL,
                    sender=reporter,
                    to=Address.swarm(tstate.swarm_id),
                    payload=Command("GOTO", point=ev.location),
                    sent_at=time,
                )
            )
    return msgs, survivors


# ---------------------------------------------------------------------------
# Strategic layer


@dataclass(frozen=True)
class TeamState:
    """Snapshot the strategic policy decides from (kept explicit so the
    response is a pure function of its inputs)."""

    table: tuple[tuple[str, StrategicRule], ...]
    swarm_roles: tuple[tuple[str, str], ...]
    positions: tuple[tuple[str, tuple[float, float, float]], ...]
    handled: frozenset[str] = frozenset()
    altitude: float = 10.0


def step_strategic(team: TeamState, event: Event) -> list[SwarmMessage]:
    """Team-wide response to a complex behavior or operator signal."""
    if event.kind in team.handled:
        return []
    rule = dict(team.table).get(event.kind)
    if rule is None:
        return []
    reporter = event.reporter or "gcs"
    roles = dict(team.swarm_roles)
    positions = dict(team.positions)
    if reporter != "gcs" and reporter not in positions:
        raise KeyError(f"strategic event from unknown agent: {reporter}")
    msgs: list[SwarmMessage] = []
    for sid in rule.land_swarms:
        msgs.append(
            SwarmMessage(
                priority=Priority.STRATEGIC,
                sender=reporter,
                to=Address.swarm(sid),
                payload=Command("LAND"),
            )
        )
    for sid in rule.activate_swarms:
        role = roles.get(sid)
        if role == ROLE_TRACK_VEHICLE:
            cmd = Command("ARM", mode="TRACK", hint=event.location)
        elif role == ROLE_HANDOFF_FOLLOW:
            rp = positions.get(reporter)
            point = (rp[0], rp[1], team.altitude) if rp else None
            cmd = Command("ARM", point=point, mode="FOLLOW", hint=event.location)
        else:
            cmd = Command("ARM", mode="SEARCH")
        msgs.append(
            SwarmMessage(
                priority=Priority.STRATEGIC,
                sender=reporter,
                to=Address.swarm(sid),
                payload=cmd,
            )
        )
    return msgs
