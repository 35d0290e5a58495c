"""Desired-vs-actual mission scoring computed purely from the event log.

Every tally here is recomputable by grepping the canonical log lines; the
simulator's in-memory state is never consulted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from . import events as ev
from .events import EventLog
from .policy import member_altitude, slant_range
from .scenario import (
    ROLE_HANDOFF_FOLLOW,
    ROLE_SEARCH_FOLLOW,
    ROLE_TRACK_VEHICLE,
    ScenarioSpec,
    build_strategic_table,
    compile_policies,
)

OUTCOME_COMPLETE = "Complete"
OUTCOME_PARTIAL = "Partial"
OUTCOME_FAILED = "Failed"

_PHASE_ORDER = (
    "SearchStarted",
    "PersonFound",
    "PersonEnteredCar",
    "CarTrackingActive",
    "PersonExitedCar",
    "HandoffFollowActive",
    "MissionEnd",
    "MissionComplete",
)

LAND_HOME_TOLERANCE = 8.0  # m from the spawn pad still counts as "at base"
FOLLOW_BAND = 1.5  # m around R0
FOLLOW_BAND_FRACTION = 0.9


@dataclass(frozen=True)
class TaskScore:
    task: str
    desired: int
    actual: int


@dataclass
class MissionReport:
    outcome: str
    per_swarm: dict[str, list[TaskScore]] = field(default_factory=dict)
    timeline: list[tuple[float, str]] = field(default_factory=list)

    def task(self, swarm_id: str, name: str) -> TaskScore:
        for t in self.per_swarm.get(swarm_id, []):
            if t.task == name:
                return t
        raise KeyError(f"{swarm_id}/{name}")

    def all_desired_met(self) -> bool:
        return all(t.actual == t.desired for ts in self.per_swarm.values() for t in ts)

    def to_json(self) -> str:
        obj = {
            "outcome": self.outcome,
            "per_swarm": {
                sid: [{"task": t.task, "desired": t.desired, "actual": t.actual} for t in ts]
                for sid, ts in self.per_swarm.items()
            },
            "timeline": [[round(t, 3), name] for t, name in self.timeline],
        }
        return json.dumps(obj, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "MissionReport":
        obj = json.loads(text)
        rep = MissionReport(obj["outcome"])
        rep.per_swarm = {
            sid: [TaskScore(t["task"], t["desired"], t["actual"]) for t in ts]
            for sid, ts in obj["per_swarm"].items()
        }
        rep.timeline = [(float(t), n) for t, n in obj["timeline"]]
        return rep


@dataclass
class _DroneEvidence:
    lock_acquired: list[tuple[float, str]] = field(default_factory=list)  # (t, class)
    lock_lost: list[tuple[float, str]] = field(default_factory=list)
    took_off: bool = False
    followed_at: float | None = None
    arrivals_goto: list[float] = field(default_factory=list)
    landed_home: bool = False
    collided: bool = False
    range_samples: list[tuple[float, float]] = field(default_factory=list)  # (t, range)


_LOCK_RE = re.compile(r"lock ([+-]) (\w+) (\S+)")
_RANGE_RE = re.compile(r"range=([0-9.]+)")
_LANDED_RE = re.compile(r"landed home_dist=([0-9.]+)")


def _gather(log: EventLog, drone_ids: list[str]) -> tuple[dict[str, _DroneEvidence], dict]:
    drones = {d: _DroneEvidence() for d in drone_ids}
    meta = {"phases": {}, "behaviors": [], "arm_sends": [], "end_time": 0.0}
    for rec in log:
        meta["end_time"] = rec.time
        d = drones.get(rec.subject)
        if rec.kind == ev.KIND_PHASE:
            meta["phases"].setdefault(rec.detail, rec.time)
        elif rec.kind == ev.KIND_BEHAVIOR:
            kind = rec.detail.split(" ", 1)[0]
            meta["behaviors"].append((rec.time, rec.subject, kind))
        elif rec.kind == ev.KIND_SENT:
            if " cmd=ARM " in rec.detail:
                m = re.search(r"to=swarm:(\S+)", rec.detail)
                meta["arm_sends"].append((rec.time, rec.subject, m.group(1) if m else None))
        elif d is None:
            continue
        elif rec.kind == ev.KIND_STATE:
            m = _LOCK_RE.search(rec.detail)
            if m:
                if m.group(1) == "+":
                    d.lock_acquired.append((rec.time, m.group(2)))
                else:
                    d.lock_lost.append((rec.time, m.group(2)))
            if "+Takeoff" in rec.detail:
                d.took_off = True
            if "+Following" in rec.detail and d.followed_at is None:
                d.followed_at = rec.time
            m = _LANDED_RE.search(rec.detail)
            if m and float(m.group(1)) <= LAND_HOME_TOLERANCE:
                d.landed_home = True
        elif rec.kind == ev.KIND_ARRIVAL:
            if rec.detail.startswith("goto"):
                d.arrivals_goto.append(rec.time)
        elif rec.kind == ev.KIND_COLLISION:
            d.collided = True
            other = rec.detail.removeprefix("with ")
            if other in drones:
                drones[other].collided = True
        elif rec.kind == ev.KIND_OBS:
            m = _RANGE_RE.search(rec.detail)
            if m:
                d.range_samples.append((rec.time, float(m.group(1))))
    return drones, meta


def _follow_held_constant(
    evidence: _DroneEvidence, r0: float, start: float, end: float
) -> bool:
    samples = [r for t, r in evidence.range_samples if start <= t <= end]
    in_band_from = None
    for i, r in enumerate(samples):
        if abs(r - r0) <= FOLLOW_BAND:
            in_band_from = i
            break
    if in_band_from is None:
        return False
    steady = samples[in_band_from:]
    good = sum(1 for r in steady if abs(r - r0) <= FOLLOW_BAND)
    return len(steady) > 0 and good / len(steady) >= FOLLOW_BAND_FRACTION


def score_mission(log: EventLog, spec: ScenarioSpec) -> MissionReport:
    """Per-swarm desired-vs-actual tallies plus the phase timeline."""
    drone_ids = spec.drone_ids()
    bundles = compile_policies(spec)
    drones, meta = _gather(log, drone_ids)
    phases: dict[str, float] = meta["phases"]
    entered_t = phases.get("PersonEnteredCar", float("inf"))
    end_t = phases.get("MissionEnd", meta["end_time"])

    # Locks on the boarding person time out while the enter event is still
    # confirming; losses inside that window are the event, not a miss.
    lock_grace = max(
        (b.operational.lock_timeout for b in bundles.values()), default=2.0
    ) + 2.5
    follow_cutoff = entered_t - lock_grace if entered_t < float("inf") else float("inf")

    # The swarm recruited on person-exit is the ARM relay's destination.
    handoff_swarms = set()
    for kind, rule in build_strategic_table(spec):
        if kind == "PersonExitedCar":
            handoff_swarms.update(rule.activate_swarms)

    report = MissionReport(outcome=OUTCOME_FAILED)
    for s in spec.swarms:
        n = len(s.drone_ids)
        members = [drones[d] for d in s.drone_ids]
        tasks: list[TaskScore] = []
        if s.role == ROLE_SEARCH_FOLLOW:
            detected = [
                m for m in members if any(cls == "Person" for _, cls in m.lock_acquired)
            ]
            no_loss = [
                m
                for m in detected
                if m.followed_at is not None
                and not any(t < follow_cutoff for t, _ in m.lock_lost)
            ]
            tasks = [
                TaskScore("detect person", n, min(n, len(detected))),
                TaskScore("follow without loss", n, min(n, len(no_loss))),
                TaskScore(
                    "no collision", n, sum(1 for m in members if m.took_off and not m.collided)
                ),
                TaskScore("land at base", n, sum(1 for m in members if m.landed_home)),
            ]
        elif s.role == ROLE_TRACK_VEHICLE:
            reached = [m for m in members if m.arrivals_goto]
            tracked = [
                m for m in members if any(cls == "Car" for _, cls in m.lock_acquired)
            ]
            exit_reports = {
                rep for _, rep, kind in meta["behaviors"] if kind == "PersonExitedCar" and rep in s.drone_ids
            }
            relayed = {
                sender
                for _, sender, to in meta["arm_sends"]
                if sender in s.drone_ids and to in handoff_swarms
            }
            tasks = [
                TaskScore("reach gps point", n, min(n, len(reached))),
                TaskScore("track car", n, min(n, len(tracked))),
                TaskScore("detect complex behavior", 1, min(1, len(exit_reports))),
                TaskScore("relay handoff arm", 1, min(1, len(relayed))),
            ]
        elif s.role == ROLE_HANDOFF_FOLLOW:
            took_off = [m for m in members if m.took_off]
            reached = [m for m in members if m.arrivals_goto]
            followed = []
            for i, d in enumerate(s.drone_ids):
                m = drones[d]
                params = bundles[d].operational
                r0 = slant_range(params.r0, member_altitude(params))
                if m.followed_at is not None and _follow_held_constant(
                    m, r0, m.followed_at, end_t
                ):
                    followed.append(m)
            returned = [m for m in members if m.took_off and m.landed_home]
            tasks = [
                TaskScore("receive takeoff", n, min(n, len(took_off))),
                TaskScore("reach handoff gps", n, min(n, len(reached))),
                TaskScore("follow at constant distance", n, min(n, len(followed))),
                TaskScore("return to base", n, min(n, len(returned))),
            ]
        report.per_swarm[s.id] = tasks

    report.timeline = sorted(
        ((t, name) for name, t in phases.items()), key=lambda it: (it[0], _phase_rank(it[1]))
    )
    roles = {s.role for s in spec.swarms}
    applicable = ["SearchStarted"]
    if ROLE_SEARCH_FOLLOW in roles:
        applicable.append("PersonFound")
    if ROLE_TRACK_VEHICLE in roles and any(
        s.activation.mode == "onevent" for s in spec.swarms if s.role == ROLE_TRACK_VEHICLE
    ):
        applicable += ["PersonEnteredCar", "CarTrackingActive"]
    if ROLE_HANDOFF_FOLLOW in roles and any(
        s.activation.mode == "onevent" for s in spec.swarms if s.role == ROLE_HANDOFF_FOLLOW
    ):
        applicable += ["PersonExitedCar", "HandoffFollowActive"]
    applicable += ["MissionEnd", "MissionComplete"]
    if all(p in phases for p in applicable):
        report.outcome = OUTCOME_COMPLETE
    elif phases:
        report.outcome = OUTCOME_PARTIAL
    else:
        report.outcome = OUTCOME_FAILED
    return report


def _phase_rank(name: str) -> int:
    try:
        return _PHASE_ORDER.index(name)
    except ValueError:
        return len(_PHASE_ORDER)
