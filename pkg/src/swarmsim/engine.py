"""Deterministic simulation loop: world -> perception -> policy -> tactical /
strategic -> network -> plant, with canonical event logging.

All randomness flows from one seed through named substreams, and every
iteration over agents, swarms, and messages is sorted, so two runs of the
same config produce byte-identical event logs.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
import threading
from dataclasses import dataclass, field, replace

from . import events as ev
from .control import Setpoint, separation_overlay
from .events import EventLog
from .geometry import Pose, Vec3, relative_spherical
from .network import (
    GCS_ID,
    Address,
    AdhocNetwork,
    Command,
    Event,
    Priority,
    SwarmMessage,
)
from .perception import TargetLock, sense
from .policy import (
    DronePolicyState,
    OpState,
    TacticalState,
    TeamState,
    detect_complex_behavior,
    observe_terminal_event,
    op_state_violations,
    step_operational,
    step_strategic,
    step_tactical,
)
from .scenario import (
    ROLE_HANDOFF_FOLLOW,
    ROLE_SEARCH_FOLLOW,
    ROLE_TRACK_VEHICLE,
    ScenarioSpec,
    build_strategic_table,
    compile_policies,
    validate_scenario,
)
from .world import (
    ActorTask,
    EntityKind,
    EntityState,
    PlantParams,
    WorldState,
    step_world,
)

FAULT_DROP_ALL_RX = "DropAllRx"
FAULT_LOCK_SWAP = "LockSwap"
FAULT_NO_TAKEOFF = "NoTakeoff"
FAULT_BLIND = "Blind"
FAULT_KINDS = (FAULT_DROP_ALL_RX, FAULT_LOCK_SWAP, FAULT_NO_TAKEOFF, FAULT_BLIND)

PHASE_SEARCH = "SearchStarted"
PHASE_FOUND = "PersonFound"
PHASE_ENTERED = "PersonEnteredCar"
PHASE_TRACKING = "CarTrackingActive"
PHASE_EXITED = "PersonExitedCar"
PHASE_HANDOFF = "HandoffFollowActive"
PHASE_END = "MissionEnd"
PHASE_COMPLETE = "MissionComplete"

TELEMETRY_PERIOD = 0.1  # s of sim time between snapshots (10 Hz)
_LAND_REISSUE_PERIOD = 30.0


def substream(seed: int, *labels: str) -> random.Random:
    """Named deterministic RNG substream derived from the master seed."""
    h = hashlib.sha256(("%d/%s" % (seed, "/".join(labels))).encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


@dataclass(frozen=True)
class FaultInjection:
    time: float
    kind: str
    target: str


@dataclass(frozen=True)
class OperatorCommand:
    name: str  # ARM | TAKEOFF | LAND | RTB | GOTO | MissionEnd
    target: str | None = None  # drone id, swarm id, or "team"
    point: tuple[float, float, float] | None = None
    at: float | None = None  # sim time to inject; None = next tick


@dataclass
class SimConfig:
    scenario: ScenarioSpec
    seed: int | None = None  # overrides the scenario seed
    loss_base: float | None = None  # overrides the scenario network loss
    fault_injections: list[FaultInjection] = field(default_factory=list)
    command_script: list[OperatorCommand] = field(default_factory=list)
    physics_rate: float | None = None  # defaults to 1/scenario.timestep
    log_snapshots: bool = True


class Simulation:
    """Single-run engine. The loop is single-threaded in sim-time order; a
    gateway interacts only through inject_command() and the event log."""

    def __init__(self, config: SimConfig) -> None:
        spec = config.scenario
        problems = validate_scenario(spec)
        if problems:
            raise ValueError("invalid scenario: " + "; ".join(problems))
        for f in config.fault_injections:
            if f.kind not in FAULT_KINDS:
                raise ValueError(f"unknown fault kind: {f.kind}")
            if f.target not in spec.drone_ids():
                raise ValueError(f"fault targets unknown drone: {f.target}")

        self.spec = spec
        self.seed = spec.rng_seed if config.seed is None else config.seed
        net_params = spec.network_params
        if config.loss_base is not None:
            net_params = replace(net_params, loss_base=config.loss_base)
        self.net_params = net_params
        self.dt = 1.0 / config.physics_rate if config.physics_rate else spec.timestep
        per_dt = 1.0 / spec.sensors.rate
        self.perception_every = max(1, round(per_dt / self.dt))
        if self.perception_every < 1 or spec.sensors.rate > 1.0 / self.dt + 1e-9:
            raise ValueError("physics rate must be >= perception rate")
        self.snapshot_every = max(1, round(TELEMETRY_PERIOD / self.dt))
        self.log_snapshots = config.log_snapshots

        self.bundles = compile_policies(spec)
        self.world = self._build_world()
        self.drones = sorted(self.bundles)
        self.policies: dict[str, DronePolicyState] = {}
        for d in self.drones:
            spawn = spec.entity(d).spawn_pose
            self.policies[d] = DronePolicyState(
                drone_id=d, bundle=self.bundles[d], home=(spawn.x, spawn.y, 0.0)
            )
        self.sense_rngs = {d: substream(self.seed, "sense", d) for d in self.drones}
        members = {s.id: list(s.drone_ids) for s in spec.swarms}
        self.network = AdhocNetwork(
            net_params, substream(self.seed, "net").randrange(2**63), members, self.drones
        )
        self.tactical: dict[str, TacticalState] = {
            s.id: TacticalState(s.id) for s in spec.swarms
        }
        self.strategic_table = build_strategic_table(spec)
        self.swarm_roles = tuple((s.id, s.role) for s in spec.swarms)
        self.handled_events: set[str] = set()
        self.swarm_of = {d: s.id for s in spec.swarms for d in s.drone_ids}

        base = next((e for e in spec.entities if e.kind is EntityKind.BASE_STATION), None)
        self.gcs_pos = (
            Vec3(base.spawn_pose.x, base.spawn_pose.y, base.spawn_pose.z) if base else Vec3()
        )
        self.plant = PlantParams()

        self.log = EventLog()
        self.time = 0.0
        self.tick_index = 0
        self.outbox: list[SwarmMessage] = []
        self.phases: dict[str, float] = {}
        self.collisions_seen = 0
        self.mission_end_sent = False
        self.last_land_reissue = -1e9
        self.done = False
        self._pending_faults = sorted(
            config.fault_injections, key=lambda f: (f.time, f.target, f.kind)
        )
        self._active_faults: dict[str, set[str]] = {d: set() for d in self.drones}
        self._lockswap_pending: set[str] = set()
        self._cmd_heap: list[tuple[float, int, OperatorCommand]] = []
        self._cmd_seq = 0
        self._cmd_lock = threading.Lock()
        for cmd in config.command_script:
            self.inject_command(cmd)
        self.log.append(
            0.0,
            ev.KIND_HEADER,
            "run",
            json.dumps(
                {
                    "v": 1,
                    "scenario": spec.mission.name,
                    "seed": self.seed,
                    "dt": self.dt,
                    "loss_base": net_params.loss_base,
                    "comm_range": net_params.comm_range,
                    "telemetry_period": TELEMETRY_PERIOD,
                },
                sort_keys=True,
                separators=(",", ":"),
            ),
        )

    # -- construction -----------------------------------------------------

    def _build_world(self) -> WorldState:
        entities = {}
        for e in self.spec.entities:
            entities[e.id] = EntityState(
                pose=e.spawn_pose, velocity=Vec3(), kind=e.kind, max_speed=e.max_speed
            )
        return WorldState(
            time=0.0,
            entities=entities,
            wind=self.spec.wind,
            pending_script=list(self.spec.script),
        )

    # -- external interaction ----------------------------------------------

    def inject_command(self, cmd: OperatorCommand) -> None:
        """Queue an operator command; drained at tick boundaries. Safe to
        call from a gateway thread while the sim loop runs."""
        with self._cmd_lock:
            at = self.time if cmd.at is None else cmd.at
            heapq.heappush(self._cmd_heap, (at, self._cmd_seq, cmd))
            self._cmd_seq += 1

    # -- helpers ------------------------------------------------------------

    def _pose(self, d: str) -> Pose:
        return self.world.entities[d].pose

    def _positions(self) -> dict[str, Vec3]:
        pos = {d: self.world.entities[d].pose.position for d in self.drones}
        pos[GCS_ID] = self.gcs_pos
        return pos

    def _grounded(self, d: str) -> bool:
        return self.world.entities[d].pose.z <= 0.05

    def _all_grounded(self) -> bool:
        return all(self._grounded(d) for d in self.drones)

    def _gcs_message(self, cmd: OperatorCommand) -> list[SwarmMessage]:
        target = cmd.target or "team"
        if target == "team":
            to = Address.team()
        elif target in self.tactical:
            to = Address.swarm(target)
        elif target in self.policies:
            to = Address.drone(target)
        else:
            raise KeyError(f"unknown command target: {target}")
        payload = Command(cmd.name, point=cmd.point)
        return [
            SwarmMessage(
                priority=Priority.STRATEGIC,
                sender=GCS_ID,
                to=to,
                payload=payload,
                sent_at=self.time,
            )
        ]

    def _mark_phase(self, name: str) -> None:
        if name not in self.phases:
            self.phases[name] = self.time
            self.log.append(self.time, ev.KIND_PHASE, "mission", name)

    def _terminal_engagement_phase(self) -> str | None:
        roles = {s.role for s in self.spec.swarms}
        if ROLE_HANDOFF_FOLLOW in roles:
            return PHASE_HANDOFF
        if ROLE_TRACK_VEHICLE in roles:
            return PHASE_TRACKING
        if ROLE_SEARCH_FOLLOW in roles:
            return PHASE_FOUND
        return None

    # -- the tick -----------------------------------------------------------

    def tick(self) -> None:
        if self.done:
            return
        t = self.time

        # Fault activation.
        while self._pending_faults and self._pending_faults[0].time <= t:
            f = self._pending_faults.pop(0)
            self._active_faults[f.target].add(f.kind)
            if f.kind == FAULT_LOCK_SWAP:
                self._lockswap_pending.add(f.target)
            self.log.append(t, ev.KIND_STATE, f.target, f"fault {f.kind}")

        # Operator/mission commands due this tick become GCS messages.
        due: list[OperatorCommand] = []
        with self._cmd_lock:
            while self._cmd_heap and self._cmd_heap[0][0] <= t + 1e-9:
                due.append(heapq.heappop(self._cmd_heap)[2])
        for cmd in due:
            if cmd.name == "MissionEnd":
                self._send_mission_end()
            else:
                self.outbox.extend(self._gcs_message(cmd))

        # Mission controller: start-of-run activation and end-of-mission land.
        if self.tick_index == 0:
            for s in self.spec.swarms:
                if s.activation.mode == "atstart":
                    self.outbox.append(
                        SwarmMessage(
                            priority=Priority.STRATEGIC,
                            sender=GCS_ID,
                            to=Address.swarm(s.id),
                            payload=Command("ARM"),
                            sent_at=t,
                        )
                    )
        terminal_phase = self._terminal_engagement_phase()
        if (
            not self.mission_end_sent
            and terminal_phase is not None
            and terminal_phase in self.phases
            and t - self.phases[terminal_phase] >= self.spec.mission.follow_duration
        ):
            self._send_mission_end()
        if (
            self.mission_end_sent
            and not self._all_grounded()
            and t - self.last_land_reissue >= _LAND_REISSUE_PERIOD
        ):
            self._reissue_land()

        # Network phase: this tick's GCS traffic plus last tick's agent
        # outboxes were staged in self.outbox.
        to_send = self.outbox
        self.outbox = []
        positions = (
            self._positions() if (to_send or self.network.has_queued()) else {}
        )
        delivered, dropped = self.network.deliver(to_send, positions)
        for msg in to_send:
            self.log.append(t, ev.KIND_SENT, msg.sender, f"id={msg.id} {msg.payload_text()}")
        for rcpt in sorted(delivered):
            for msg in delivered[rcpt]:
                self.log.append(
                    t, ev.KIND_DELIVERED, rcpt, f"id={msg.id} {msg.payload_text()}"
                )
        for rec in dropped:
            self.log.append(
                t,
                ev.KIND_DROPPED,
                rec.recipient,
                f"id={rec.message.id} reason={rec.reason} {rec.message.payload_text()}",
            )

        # Perception.
        perception_tick = self.tick_index % self.perception_every == 0
        obs_map = {}
        detections: list[tuple[str, Event]] = []
        if perception_tick:
            for d in self.drones:
                if FAULT_BLIND in self._active_faults[d] or self._grounded(d):
                    obs_map[d] = []
                    continue
                obs = sense(self.world, d, self.spec.sensors, self.sense_rngs[d])
                obs_map[d] = obs
                event = detect_complex_behavior(self.policies[d].detector, obs, t)
                if event is not None:
                    detections.append((d, event))

        # Policy steps.
        setpoints: dict[str, Setpoint] = {}
        local_events: dict[str, list[tuple[str, Event]]] = {s.id: [] for s in self.spec.swarms}
        for d, event in detections:
            local_events[self.swarm_of[d]].append((d, event))
        for d in self.drones:
            ps = self.policies[d]
            inbox = delivered.get(d, [])
            inbox = self._filter_inbox(d, inbox, t)
            obs = obs_map.get(d) if perception_tick else None
            if obs is not None and d in self._lockswap_pending:
                self._apply_lock_swap(ps, obs, t)
            before = set(ps.op)
            sp, evts = step_operational(ps, self._pose(d), obs, inbox, t, self.dt)
            violations = op_state_violations(ps.op)
            if violations:
                raise AssertionError(f"{d}: {violations}")
            for e2 in evts:
                local_events[self.swarm_of[d]].append((d, e2))
            if sp is not None:
                setpoints[d] = sp
            self._drain_notes(d, ps, before, t)

        # Tactical coordination per swarm, then strategic responses.
        fired: set[str] = set()
        for s in self.spec.swarms:
            evts = local_events[s.id]
            if not evts:
                continue
            group = [self.policies[d] for d in s.drone_ids]
            msgs, survivors = step_tactical(self.tactical[s.id], group, evts, t)
            for m in msgs:
                m.sent_at = t
            self.outbox.extend(msgs)
            for event in survivors:
                if event.kind in ("PersonEnteredCar", "PersonExitedCar"):
                    self._handle_complex_behavior(event, fired, t)

        # Separation overlay, then the plant.
        self._apply_separation(setpoints)
        collisions_before = len(self.world.collision_log)
        step_world(self.world, setpoints, self.dt, self.plant, fired)
        for tc, a, b in self.world.collision_log[collisions_before:]:
            self.log.append(t, ev.KIND_COLLISION, a, f"with {b}")

        # Observation summaries for locked targets (scoring evidence).
        if perception_tick:
            for d in self.drones:
                ps = self.policies[d]
                if ps.lock.locked_id is None:
                    continue
                for o in obs_map.get(d, ()):
                    if o.observed_id == ps.lock.locked_id:
                        self.log.append(
                            t,
                            ev.KIND_OBS,
                            d,
                            f"lock={o.observed_id} cls={o.target_class} "
                            f"range={o.range:.2f} cx={o.bbox[0]:.3f}",
                        )
                        break

        self.tick_index += 1
        self.time = round(self.tick_index * self.dt, 9)
        self._update_phases()
        if self.log_snapshots and self.tick_index % self.snapshot_every == 0:
            self.log.append(self.time, ev.KIND_SNAPSHOT, "world", self._snapshot_detail())

        if PHASE_COMPLETE in self.phases or self.time >= self.spec.duration_limit - 1e-9:
            self.done = True

    # -- tick helpers --------------------------------------------------------

    def _send_mission_end(self) -> None:
        self.mission_end_sent = True
        self.last_land_reissue = self.time
        self._mark_phase(PHASE_END)
        self.outbox.append(
            SwarmMessage(
                priority=Priority.STRATEGIC,
                sender=GCS_ID,
                to=Address.team(),
                payload=Command("LAND"),
                sent_at=self.time,
            )
        )

    def _reissue_land(self) -> None:
        self.last_land_reissue = self.time
        self.outbox.append(
            SwarmMessage(
                priority=Priority.STRATEGIC,
                sender=GCS_ID,
                to=Address.team(),
                payload=Command("LAND"),
                sent_at=self.time,
            )
        )

    def _filter_inbox(
        self, d: str, inbox: list[SwarmMessage], t: float
    ) -> list[SwarmMessage]:
        faults = self._active_faults[d]
        if not faults or not inbox:
            return inbox
        out = []
        for msg in inbox:
            name = msg.payload.name if isinstance(msg.payload, Command) else None
            if FAULT_DROP_ALL_RX in faults:
                self.log.append(t, ev.KIND_DROPPED, d, f"id={msg.id} reason=rx-fault")
                continue
            if FAULT_NO_TAKEOFF in faults and name in ("ARM", "TAKEOFF"):
                self.log.append(t, ev.KIND_DROPPED, d, f"id={msg.id} reason=no-takeoff-fault")
                continue
            out.append(msg)
        return out

    def _apply_lock_swap(self, ps: DronePolicyState, obs, t: float) -> None:
        if ps.lock.locked_id is None:
            return
        others = [o.observed_id for o in obs if o.observed_id != ps.lock.locked_id]
        if not others:
            return
        self._lockswap_pending.discard(ps.drone_id)
        self.log.append(
            t, ev.KIND_STATE, ps.drone_id, f"lock ! swap {ps.lock.locked_id}->{others[0]}"
        )
        ps.lock = TargetLock(others[0], acquired_at=ps.lock.acquired_at, last_seen=t)

    def _handle_complex_behavior(self, event: Event, fired: set[str], t: float) -> None:
        loc = event.location or (0.0, 0.0, 0.0)
        self.log.append(
            t,
            ev.KIND_BEHAVIOR,
            event.reporter or "?",
            f"{event.kind} at {loc[0]:.1f},{loc[1]:.1f}",
        )
        self._mark_phase(event.kind)
        fired.add(event.kind)
        reporter = event.reporter
        if reporter is not None:
            observe_terminal_event(self.policies[reporter], event.kind, t)
        if event.kind in self.handled_events:
            return
        # Broadcast the event itself (top-priority observation), then the
        # strategic response from the reporting agent.
        self.outbox.append(
            SwarmMessage(
                priority=Priority.STRATEGIC,
                sender=reporter or GCS_ID,
                to=Address.team(),
                payload=event,
                sent_at=t,
            )
        )
        team = TeamState(
            table=self.strategic_table,
            swarm_roles=self.swarm_roles,
            positions=tuple(
                (d, (p.x, p.y, p.z))
                for d, p in ((d2, self._pose(d2)) for d2 in self.drones)
            ),
            handled=frozenset(self.handled_events),
            altitude=self.spec.mission.altitude,
        )
        msgs = step_strategic(team, event)
        for m in msgs:
            m.sent_at = t
        self.outbox.extend(msgs)
        self.handled_events.add(event.kind)

    def _apply_separation(self, setpoints: dict[str, Setpoint]) -> None:
        airborne = [
            d
            for d in self.drones
            if self.world.entities[d].pose.z > 3.0
            and OpState.LANDING not in self.policies[d].op
        ]
        for d in list(setpoints):
            if d not in airborne:
                continue
            params = self.bundles[d].operational
            me = self.world.entities[d].pose
            neighbors = []
            for other in airborne:
                if other == d:
                    continue
                rng, bearing, _ = relative_spherical(
                    me, self.world.entities[other].pose.position
                )
                if rng < params.min_sep:
                    neighbors.append((rng, bearing))
            if neighbors:
                setpoints[d] = separation_overlay(
                    setpoints[d],
                    neighbors,
                    params.min_sep,
                    params.repulse_gain,
                    self.dt,
                    pose=me,
                    max_speed=self.world.entities[d].max_speed,
                    approach_gain=self.plant.position_gain,
                )

    def _drain_notes(
        self, d: str, ps: DronePolicyState, before: set[OpState], t: float
    ) -> None:
        after = ps.op
        if before != after:
            gained = sorted(s.value for s in after - before)
            lost = sorted(s.value for s in before - after)
            detail = " ".join(["+" + s for s in gained] + ["-" + s for s in lost])
            self.log.append(t, ev.KIND_STATE, d, detail)
        for kind, detail in ps.log_notes:
            if kind == "Arrival":
                if detail == "home":
                    hx, hy, _ = ps.home
                    pos = self.world.entities[d].pose
                    dist = ((pos.x - hx) ** 2 + (pos.y - hy) ** 2) ** 0.5
                    self.log.append(t, ev.KIND_ARRIVAL, d, f"home dist={dist:.1f}")
                else:
                    self.log.append(t, ev.KIND_ARRIVAL, d, detail)
            elif kind == "Landed":
                hx, hy, _ = ps.home
                pos = self.world.entities[d].pose
                dist = ((pos.x - hx) ** 2 + (pos.y - hy) ** 2) ** 0.5
                self.log.append(t, ev.KIND_STATE, d, f"landed home_dist={dist:.1f}")
            else:
                self.log.append(t, ev.KIND_STATE, d, f"{kind.lower()} {detail}")
        ps.log_notes.clear()
        if ps.pending_outbox:
            self.outbox.extend(ps.pending_outbox)
            ps.pending_outbox = []

    def _update_phases(self) -> None:
        pols = self.policies
        if PHASE_SEARCH not in self.phases and any(
            OpState.SEARCHING in pols[d].op for d in self.drones
        ):
            self._mark_phase(PHASE_SEARCH)
        if PHASE_FOUND not in self.phases and any(
            pols[d].ever_locked
            for d in self.drones
            if self.bundles[d].role == ROLE_SEARCH_FOLLOW
        ):
            self._mark_phase(PHASE_FOUND)
        if PHASE_TRACKING not in self.phases and any(
            OpState.TRACKING in pols[d].op and pols[d].lock.locked_id
            for d in self.drones
            if self.bundles[d].role == ROLE_TRACK_VEHICLE
        ):
            self._mark_phase(PHASE_TRACKING)
        if PHASE_HANDOFF not in self.phases and any(
            OpState.FOLLOWING in pols[d].op
            for d in self.drones
            if self.bundles[d].role == ROLE_HANDOFF_FOLLOW
        ):
            self._mark_phase(PHASE_HANDOFF)
        if (
            PHASE_COMPLETE not in self.phases
            and self.mission_end_sent
            and self._all_grounded()
        ):
            self._mark_phase(PHASE_COMPLETE)

    def _snapshot_detail(self) -> str:
        w = self.world
        ents = []
        for eid in sorted(w.entities):
            e = w.entities[eid]
            p = e.pose
            ents.append(
                [
                    eid,
                    e.kind.value,
                    round(p.x, 2),
                    round(p.y, 2),
                    round(p.z, 2),
                    round(p.yaw, 3),
                    e.carried_by or "",
                ]
            )
        drones = []
        for d in self.drones:
            ps = self.policies[d]
            states = "+".join(sorted(s.value for s in ps.op))
            drones.append(
                [
                    d,
                    self.swarm_of[d],
                    states,
                    ps.lock.locked_id or "",
                    round(ps.endurance_remaining, 1),
                ]
            )
        links = []
        positions = self._positions()
        nodes = sorted(positions)
        from .network import link_range
        from .geometry import dist3d

        for i, a in enumerate(nodes):
            for b in nodes[i + 1 :]:
                if dist3d(positions[a], positions[b]) <= link_range(a, b, self.net_params):
                    links.append([a, b])
        return json.dumps(
            {"e": ents, "d": drones, "l": links}, sort_keys=True, separators=(",", ":")
        )

    # -- run ------------------------------------------------------------------

    def run(self) -> tuple[EventLog, "MissionReport"]:
        from .scoring import score_mission

        while not self.done:
            self.tick()
        report = score_mission(self.log, self.spec)
        return self.log, report
