"""Scenario definition: file format, validation, and per-drone policy
compilation.

A scenario file is line-oriented UTF-8 text with `[section]` headers and
`key = value` pairs; `#` starts a comment. Sections: `[world]`,
`[entity <id>]`, `[swarm <id>]`, `[network]`, `[sensors]`, `[mission]`, and
`[script]` whose lines read `at <t>s <entity> <action> <args...>` or
`on <EventKind> <entity> <action> <args...>`.

GPS positions are a local Cartesian frame in meters with the base station
at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .geometry import Pose
from .network import NetworkParams
from .perception import SensorSuite
from .world import EntityKind, WindField


class ScenarioError(ValueError):
    """Raised on syntax errors, unresolved references, or invariant breaks."""


class PolicyCompileError(ValueError):
    """Raised when a swarm role is missing parameters it requires."""


@dataclass(frozen=True)
class Rect:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def contains(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y


@dataclass(frozen=True)
class EntitySpec:
    id: str
    kind: EntityKind
    spawn_pose: Pose
    max_speed: float = 0.0


@dataclass(frozen=True)
class Activation:
    mode: str = "atstart"  # "atstart" | "onevent"
    event: str | None = None

    def text(self) -> str:
        return "atstart" if self.mode == "atstart" else f"onevent {self.event}"


ROLE_SEARCH_FOLLOW = "searchfollow"
ROLE_TRACK_VEHICLE = "trackvehicle"
ROLE_HANDOFF_FOLLOW = "handofffollow"
ROLES = (ROLE_SEARCH_FOLLOW, ROLE_TRACK_VEHICLE, ROLE_HANDOFF_FOLLOW)

# Override keys a [swarm] section may set on its members' operational params.
_SWARM_OVERRIDE_KEYS = (
    "d0",
    "r0",
    "center_threshold",
    "distance_deadband",
    "yaw_gain",
    "approach_speed",
    "follow_speed_cap",
    "lock_timeout",
    "arrival_radius",
    "cruise_speed",
    "min_sep",
    "repulse_gain",
    "altitude",
    "alt_stagger",
    "climb_rate",
    "endurance",
    "return_margin",
    "scan_rate",
    "loiter_radius",
)


@dataclass(frozen=True)
class SwarmSpec:
    id: str
    drone_ids: tuple[str, ...]
    role: str
    waypoints: tuple[tuple[float, float], ...] = ()
    activation: Activation = Activation()
    overrides: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class ScriptedAction:
    entity: str
    action: str  # walkto | entercar | driveroute | stopcar | exitcar | idle
    at_time: float | None = None
    trigger: str | None = None
    point: tuple[float, float] | None = None
    speed: float = 0.0
    route: tuple[tuple[float, float], ...] = ()
    target: str | None = None


@dataclass(frozen=True)
class MissionSpec:
    name: str = "mission"
    follow_duration: float = 60.0  # handoff-follow time before mission end
    altitude: float = 10.0


@dataclass(frozen=True)
class OperationalParams:
    """Per-agent controller parameters (the operational memory bank).

    d0 and r0 are horizontal standoff distances; the policy converts them to
    the slant ranges the sensors actually measure using the member's
    assigned altitude (base altitude plus a per-member stagger that keeps
    swarm-mates vertically deconflicted).
    """

    d0: float = 8.0
    r0: float = 5.0
    center_threshold: float = 0.1
    distance_deadband: float = 1.0
    yaw_gain: float = 1.5
    approach_speed: float = 2.5
    follow_speed_cap: float = 6.0
    lock_timeout: float = 2.0
    arrival_radius: float = 5.0
    cruise_speed: float = 6.0
    min_sep: float = 6.0
    repulse_gain: float = 4.0
    altitude: float = 10.0
    alt_stagger: float = 2.5
    climb_rate: float = 2.0
    endurance: float = 600.0
    return_margin: float = 60.0
    scan_rate: float = 0.5
    loiter_radius: float = 20.0
    fov: float = 1.5707963267948966  # camera fov, for bearing<->cx mapping
    wanted_class: str = "Person"
    search_pattern: tuple[tuple[float, float], ...] = ()
    search_start_index: int = 0
    station: tuple[float, float] | None = None
    member_index: int = 0
    member_count: int = 1

    def violations(self, owner: str) -> list[str]:
        out = []
        if self.d0 <= 0:
            out.append(f"{owner}: D0 must be > 0")
        if self.r0 <= 0:
            out.append(f"{owner}: R0 must be > 0")
        if not 0.0 < self.center_threshold < 0.5:
            out.append(f"{owner}: center_threshold must be in (0, 0.5)")
        return out


@dataclass(frozen=True)
class TacticalRules:
    swarm_id: str
    terminal_event: str | None = None  # group lands when this event is known
    dedup_window: float = 5.0
    land_quorum: int = 2  # distinct peer confirmations for an autonomous land


@dataclass(frozen=True)
class StrategicRule:
    land_swarms: tuple[str, ...] = ()
    activate_swarms: tuple[str, ...] = ()


@dataclass(frozen=True)
class PolicyBundle:
    drone_id: str
    swarm_id: str
    role: str
    strategic: tuple[tuple[str, StrategicRule], ...]  # event kind -> rule
    tactical: TacticalRules
    operational: OperationalParams


@dataclass(frozen=True)
class ScenarioSpec:
    world_extent: Rect = Rect(-200.0, -200.0, 200.0, 200.0)
    timestep: float = 0.05
    duration_limit: float = 600.0
    rng_seed: int = 0
    entities: tuple[EntitySpec, ...] = ()
    swarms: tuple[SwarmSpec, ...] = ()
    script: tuple[ScriptedAction, ...] = ()
    network_params: NetworkParams = NetworkParams()
    mission: MissionSpec = MissionSpec()
    sensors: SensorSuite = SensorSuite()
    wind: WindField = WindField()

    def entity(self, eid: str) -> EntitySpec:
        for e in self.entities:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def drone_ids(self) -> list[str]:
        return [e.id for e in self.entities if e.kind is EntityKind.DRONE]

    def swarm_of(self, drone_id: str) -> SwarmSpec | None:
        for s in self.swarms:
            if drone_id in s.drone_ids:
                return s
        return None


# ---------------------------------------------------------------------------
# Parsing


def _floats(text: str, n: int, where: str) -> list[float]:
    parts = text.split()
    if len(parts) != n:
        raise ScenarioError(f"{where}: expected {n} numbers, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ScenarioError(f"{where}: invalid number in '{text}'") from None


def _point_list(text: str, where: str) -> tuple[tuple[float, float], ...]:
    pts = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, y = _floats(chunk, 2, where)
        pts.append((x, y))
    return tuple(pts)


def _parse_script_line(line: str, where: str) -> ScriptedAction:
    toks = line.split()
    if toks[0] == "at":
        if len(toks) < 4 or not toks[1].endswith("s"):
            raise ScenarioError(f"{where}: script line must be 'at <t>s <entity> <action> ...'")
        try:
            at_time = float(toks[1][:-1])
        except ValueError:
            raise ScenarioError(f"{where}: bad time '{toks[1]}'") from None
        trigger = None
        entity, action, args = toks[2], toks[3].lower(), toks[4:]
    elif toks[0] == "on":
        if len(toks) < 4:
            raise ScenarioError(f"{where}: script line must be 'on <event> <entity> <action> ...'")
        at_time, trigger = None, toks[1]
        entity, action, args = toks[2], toks[3].lower(), toks[4:]
    else:
        raise ScenarioError(f"{where}: script lines start with 'at' or 'on'")

    if action == "walkto":
        if len(args) != 3:
            raise ScenarioError(f"{where}: walkto takes x y speed")
        x, y, speed = (float(a) for a in args)
        return ScriptedAction(entity, "walkto", at_time, trigger, point=(x, y), speed=speed)
    if action == "driveroute":
        if len(args) < 3 or len(args) % 2 == 0:
            raise ScenarioError(f"{where}: driveroute takes speed x1 y1 [x2 y2 ...]")
        speed = float(args[0])
        coords = [float(a) for a in args[1:]]
        route = tuple((coords[i], coords[i + 1]) for i in range(0, len(coords), 2))
        return ScriptedAction(entity, "driveroute", at_time, trigger, speed=speed, route=route)
    if action == "entercar":
        if len(args) != 1:
            raise ScenarioError(f"{where}: entercar takes a car id")
        return ScriptedAction(entity, "entercar", at_time, trigger, target=args[0])
    if action in ("exitcar", "stopcar", "idle"):
        if args:
            raise ScenarioError(f"{where}: {action} takes no arguments")
        return ScriptedAction(entity, action, at_time, trigger)
    raise ScenarioError(f"{where}: unknown action '{action}'")


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario file; raises ScenarioError on any
    syntax problem, unknown reference, or invariant violation."""
    world: dict[str, str] = {}
    network: dict[str, str] = {}
    sensors: dict[str, str] = {}
    mission: dict[str, str] = {}
    entity_sections: list[tuple[str, dict[str, str], int]] = []
    swarm_sections: list[tuple[str, dict[str, str], int]] = []
    script: list[ScriptedAction] = []

    section: str | None = None
    current: dict[str, str] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"{where}: unterminated section header")
            header = line[1:-1].strip().split()
            if not header:
                raise ScenarioError(f"{where}: empty section header")
            name = header[0].lower()
            if name == "world" and len(header) == 1:
                section, current = "world", world
            elif name == "network" and len(header) == 1:
                section, current = "network", network
            elif name == "sensors" and len(header) == 1:
                section, current = "sensors", sensors
            elif name == "mission" and len(header) == 1:
                section, current = "mission", mission
            elif name == "script" and len(header) == 1:
                section, current = "script", None
            elif name == "entity" and len(header) == 2:
                current = {}
                entity_sections.append((header[1], current, lineno))
                section = "entity"
            elif name == "swarm" and len(header) == 2:
                current = {}
                swarm_sections.append((header[1], current, lineno))
                section = "swarm"
            else:
                raise ScenarioError(f"{where}: unknown section '[{line[1:-1]}]'")
            continue
        if section is None:
            raise ScenarioError(f"{where}: content before any section header")
        if section == "script":
            script.append(_parse_script_line(line, where))
            continue
        if "=" not in line:
            raise ScenarioError(f"{where}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError(f"{where}: empty key")
        current[key.lower()] = val

    spec = _build_spec(world, network, sensors, mission, entity_sections, swarm_sections, script)
    _resolve_references(spec)
    problems = validate_scenario(spec)
    if problems:
        raise ScenarioError("invariant violation: " + "; ".join(problems))
    return spec


def _build_spec(world, network, sensors, mission, entity_sections, swarm_sections, script):
    extent = Rect(*_floats(world.get("extent", "-200 -200 200 200"), 4, "[world] extent"))
    wind_vals = _floats(world.get("wind", "0 0 0 10"), 4, "[world] wind")
    entities = []
    for eid, keys, lineno in entity_sections:
        where = f"[entity {eid}] (line {lineno})"
        kind_text = keys.get("kind", "").lower()
        try:
            kind = EntityKind(kind_text)
        except ValueError:
            raise ScenarioError(f"{where}: unknown kind '{kind_text}'") from None
        spawn = _floats(keys.get("spawn", "0 0 0 0"), 4, f"{where} spawn")
        entities.append(
            EntitySpec(eid, kind, Pose(*spawn), max_speed=float(keys.get("max_speed", "0")))
        )
    swarms = []
    for sid, keys, lineno in swarm_sections:
        where = f"[swarm {sid}] (line {lineno})"
        role = keys.get("role", "").lower()
        if role not in ROLES:
            raise ScenarioError(f"{where}: unknown role '{role}'")
        act_text = keys.get("activation", "atstart").split()
        if act_text[0].lower() == "atstart" and len(act_text) == 1:
            activation = Activation()
        elif act_text[0].lower() == "onevent" and len(act_text) == 2:
            activation = Activation("onevent", act_text[1])
        else:
            raise ScenarioError(f"{where}: activation must be 'atstart' or 'onevent <kind>'")
        overrides = []
        for k in _SWARM_OVERRIDE_KEYS:
            if k in keys:
                try:
                    overrides.append((k, float(keys[k])))
                except ValueError:
                    raise ScenarioError(f"{where}: bad number for '{k}'") from None
        swarms.append(
            SwarmSpec(
                sid,
                tuple(keys.get("drones", "").split()),
                role,
                waypoints=_point_list(keys.get("waypoints", ""), f"{where} waypoints"),
                activation=activation,
                overrides=tuple(overrides),
            )
        )
    net = NetworkParams(
        comm_range=float(network.get("comm_range", "150")),
        loss_base=float(network.get("loss_base", "0")),
        loss_range_exponent=float(network.get("loss_exponent", "2")),
        bandwidth=int(network.get("bandwidth", "1024")),
        latency=int(network.get("latency", "1")),
        relay_enabled=network.get("relay", "true").lower() in ("true", "1", "yes"),
        gcs_range_factor=float(network.get("gcs_range_factor", "10")),
    )
    suite = SensorSuite(
        rgb_fov=float(sensors["rgb_fov"]) if "rgb_fov" in sensors else SensorSuite.rgb_fov,
        rgb_max_range=float(sensors.get("rgb_max_range", SensorSuite.rgb_max_range)),
        depth_max_range=float(sensors.get("depth_max_range", SensorSuite.depth_max_range)),
        radar_max_range=float(sensors.get("radar_max_range", SensorSuite.radar_max_range)),
        radar_range_sigma=float(sensors.get("radar_range_sigma", SensorSuite.radar_range_sigma)),
        detect_prob_base=float(sensors.get("detect_prob_base", SensorSuite.detect_prob_base)),
        dark_side_penalty=float(sensors.get("dark_side_penalty", SensorSuite.dark_side_penalty)),
        rate=float(sensors.get("rate", SensorSuite.rate)),
    )
    return ScenarioSpec(
        world_extent=extent,
        timestep=float(world.get("timestep", "0.05")),
        duration_limit=float(world.get("duration_limit", "600")),
        rng_seed=int(world.get("seed", "0")),
        entities=tuple(entities),
        swarms=tuple(swarms),
        script=tuple(script),
        network_params=net,
        mission=MissionSpec(
            name=mission.get("name", "mission"),
            follow_duration=float(mission.get("follow_duration", "60")),
            altitude=float(mission.get("altitude", "10")),
        ),
        sensors=suite,
        wind=WindField((wind_vals[0], wind_vals[1]), wind_vals[2], wind_vals[3]),
    )


def _resolve_references(spec: ScenarioSpec) -> None:
    ids = {e.id for e in spec.entities}
    for s in spec.swarms:
        for d in s.drone_ids:
            if d not in ids:
                raise ScenarioError(f"unknown entity reference: swarm {s.id} lists '{d}'")
    for a in spec.script:
        if a.entity not in ids:
            raise ScenarioError(f"unknown entity reference: script names '{a.entity}'")
        if a.target is not None and a.target not in ids:
            raise ScenarioError(f"unknown entity reference: script names '{a.target}'")


def validate_scenario(spec: ScenarioSpec) -> list[str]:
    """All invariant checks; empty list means the scenario is sound."""
    out: list[str] = []
    if spec.timestep <= 0:
        out.append("timestep must be > 0")
    if spec.duration_limit <= 0:
        out.append("duration_limit must be > 0")
    seen_ids: set[str] = set()
    for e in spec.entities:
        if e.id in seen_ids:
            out.append(f"entity id '{e.id}' is not unique")
        seen_ids.add(e.id)
        if not spec.world_extent.contains(e.spawn_pose.x, e.spawn_pose.y):
            out.append(f"entity '{e.id}' spawns outside the world extent")
        if e.kind in (EntityKind.PERSON, EntityKind.CAR) and e.spawn_pose.z != 0.0:
            out.append(f"entity '{e.id}' ({e.kind.value}) must spawn at z = 0")
        if e.kind is EntityKind.DRONE and e.max_speed <= 0:
            out.append(f"drone '{e.id}' needs max_speed > 0")
    swarm_ids: set[str] = set()
    assigned: dict[str, str] = {}
    for s in spec.swarms:
        if s.id in swarm_ids:
            out.append(f"swarm id '{s.id}' is not unique")
        swarm_ids.add(s.id)
        if not s.drone_ids:
            out.append(f"swarm '{s.id}' has no drones")
        for d in s.drone_ids:
            if d in assigned:
                out.append(f"drone '{d}' belongs to both '{assigned[d]}' and '{s.id}'")
            assigned[d] = s.id
        if s.role == ROLE_TRACK_VEHICLE and not s.waypoints:
            out.append(f"swarm '{s.id}' role trackvehicle needs at least one waypoint")
        if s.activation.mode == "onevent" and not s.activation.event:
            out.append(f"swarm '{s.id}' onevent activation needs an event kind")
    for d in (e.id for e in spec.entities if e.kind is EntityKind.DRONE):
        if d not in assigned:
            out.append(f"drone '{d}' belongs to no swarm")
    for a in spec.script:
        if a.at_time is not None and a.at_time < 0:
            out.append(f"script action for '{a.entity}' has negative time")
    out.extend(spec.network_params.violations())
    if spec.mission.follow_duration <= 0:
        out.append("mission follow_duration must be > 0")
    return out


# ---------------------------------------------------------------------------
# Serialization


def _fmt(x: float) -> str:
    # repr round-trips floats exactly, which the golden files rely on.
    return repr(x) if isinstance(x, float) else str(x)


def serialize_scenario(spec: ScenarioSpec) -> str:
    """Canonical text form; parse(serialize(spec)) == spec."""
    w = spec.world_extent
    lines = [
        "[world]",
        f"extent = {_fmt(w.min_x)} {_fmt(w.min_y)} {_fmt(w.max_x)} {_fmt(w.max_y)}",
        f"timestep = {_fmt(spec.timestep)}",
        f"duration_limit = {_fmt(spec.duration_limit)}",
        f"seed = {spec.rng_seed}",
        "wind = %s %s %s %s"
        % (
            _fmt(spec.wind.mean[0]),
            _fmt(spec.wind.mean[1]),
            _fmt(spec.wind.gust_amplitude),
            _fmt(spec.wind.gust_period),
        ),
        "",
    ]
    for e in spec.entities:
        p = e.spawn_pose
        lines += [
            f"[entity {e.id}]",
            f"kind = {e.kind.value}",
            f"spawn = {_fmt(p.x)} {_fmt(p.y)} {_fmt(p.z)} {_fmt(p.yaw)}",
            f"max_speed = {_fmt(e.max_speed)}",
            "",
        ]
    for s in spec.swarms:
        lines += [
            f"[swarm {s.id}]",
            f"role = {s.role}",
            "drones = " + " ".join(s.drone_ids),
            f"activation = {s.activation.text()}",
        ]
        if s.waypoints:
            lines.append(
                "waypoints = " + ", ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in s.waypoints)
            )
        for k, v in s.overrides:
            lines.append(f"{k} = {_fmt(v)}")
        lines.append("")
    n = spec.network_params
    lines += [
        "[network]",
        f"comm_range = {_fmt(n.comm_range)}",
        f"loss_base = {_fmt(n.loss_base)}",
        f"loss_exponent = {_fmt(n.loss_range_exponent)}",
        f"bandwidth = {n.bandwidth}",
        f"latency = {n.latency}",
        f"relay = {'true' if n.relay_enabled else 'false'}",
        f"gcs_range_factor = {_fmt(n.gcs_range_factor)}",
        "",
    ]
    su = spec.sensors
    lines += [
        "[sensors]",
        f"rgb_fov = {_fmt(su.rgb_fov)}",
        f"rgb_max_range = {_fmt(su.rgb_max_range)}",
        f"depth_max_range = {_fmt(su.depth_max_range)}",
        f"radar_max_range = {_fmt(su.radar_max_range)}",
        f"radar_range_sigma = {_fmt(su.radar_range_sigma)}",
        f"detect_prob_base = {_fmt(su.detect_prob_base)}",
        f"dark_side_penalty = {_fmt(su.dark_side_penalty)}",
        f"rate = {_fmt(su.rate)}",
        "",
        "[mission]",
        f"name = {spec.mission.name}",
        f"follow_duration = {_fmt(spec.mission.follow_duration)}",
        f"altitude = {_fmt(spec.mission.altitude)}",
        "",
        "[script]",
    ]
    for a in spec.script:
        head = f"at {_fmt(a.at_time)}s" if a.at_time is not None else f"on {a.trigger}"
        if a.action == "walkto":
            tail = f"walkto {_fmt(a.point[0])} {_fmt(a.point[1])} {_fmt(a.speed)}"
        elif a.action == "driveroute":
            tail = "driveroute %s %s" % (
                _fmt(a.speed),
                " ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in a.route),
            )
        elif a.action == "entercar":
            tail = f"entercar {a.target}"
        else:
            tail = a.action
        lines.append(f"{head} {a.entity} {tail}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Policy compilation


_ROLE_WANTED = {
    ROLE_SEARCH_FOLLOW: "Person",
    ROLE_TRACK_VEHICLE: "Car",
    ROLE_HANDOFF_FOLLOW: "Person",
}
_ROLE_TERMINAL = {
    ROLE_SEARCH_FOLLOW: "PersonEnteredCar",
    ROLE_TRACK_VEHICLE: None,
    ROLE_HANDOFF_FOLLOW: None,
}


def build_strategic_table(spec: ScenarioSpec) -> tuple[tuple[str, StrategicRule], ...]:
    """Team-wide event -> response mapping, identical for every agent."""
    events: dict[str, dict[str, list[str]]] = {}
    for s in spec.swarms:
        if s.activation.mode == "onevent":
            events.setdefault(s.activation.event, {"land": [], "activate": []})
            events[s.activation.event]["activate"].append(s.id)
        term = _ROLE_TERMINAL[s.role]
        if term is not None:
            events.setdefault(term, {"land": [], "activate": []})
            events[term]["land"].append(s.id)
    table = tuple(
        (kind, StrategicRule(tuple(sorted(v["land"])), tuple(sorted(v["activate"]))))
        for kind, v in sorted(events.items())
    )
    return table


def compile_policies(spec: ScenarioSpec) -> dict[str, PolicyBundle]:
    """Distribute one multi-layer policy bundle per drone, top to bottom.

    Bundles within a swarm share tactical rules; the strategic table is the
    same for the whole team.
    """
    strategic = build_strategic_table(spec)
    bundles: dict[str, PolicyBundle] = {}
    for s in spec.swarms:
        ov = dict(s.overrides)
        bad = [k for k, v in ov.items() if v <= 0 and k not in ("min_sep",)]
        if bad:
            raise PolicyCompileError(f"swarm {s.id}: non-positive parameter(s) {bad}")
        if s.role == ROLE_TRACK_VEHICLE and not s.waypoints:
            raise PolicyCompileError(f"swarm {s.id}: trackvehicle role requires waypoints")
        tactical = TacticalRules(swarm_id=s.id, terminal_event=_ROLE_TERMINAL[s.role])
        n = len(s.drone_ids)
        for i, drone_id in enumerate(s.drone_ids):
            params = OperationalParams(
                wanted_class=_ROLE_WANTED[s.role],
                search_pattern=s.waypoints if s.role == ROLE_SEARCH_FOLLOW else (),
                search_start_index=(i * len(s.waypoints)) // n if s.waypoints else 0,
                station=s.waypoints[i % len(s.waypoints)] if s.role == ROLE_TRACK_VEHICLE else None,
                member_index=i,
                member_count=n,
                altitude=spec.mission.altitude,
                fov=spec.sensors.rgb_fov,
                **{k: v for k, v in ov.items() if k != "altitude"},
            )
            if "altitude" in ov:
                params = replace(params, altitude=ov["altitude"])
            problems = params.violations(f"swarm {s.id}")
            if problems:
                raise PolicyCompileError("; ".join(problems))
            bundles[drone_id] = PolicyBundle(
                drone_id=drone_id,
                swarm_id=s.id,
                role=s.role,
                strategic=strategic,
                tactical=tactical,
                operational=params,
            )
    return bundles
