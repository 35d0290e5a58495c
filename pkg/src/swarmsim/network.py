"""Simulated ad-hoc swarm network: range-limited links, distance-dependent
packet loss, per-link bandwidth with strict priority, and latency.

There is no retransmission or acknowledgment here; anything that must be
reliable (land quorums, handoff activation) is the policy layer's problem.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field, replace
from enum import IntEnum

from .geometry import dist3d, Vec3

GCS_ID = "gcs"


class Priority(IntEnum):
    """Queue precedence: Strategic > Tactical > Operational."""

    OPERATIONAL = 0
    TACTICAL = 1
    STRATEGIC = 2

    @property
    def letter(self) -> str:
        return {0: "O", 1: "T", 2: "S"}[int(self)]


@dataclass(frozen=True)
class Address:
    """Message destination: a single drone, a whole swarm, or the team."""

    kind: str  # "drone" | "swarm" | "team"
    target: str | None = None

    @staticmethod
    def drone(drone_id: str) -> "Address":
        return Address("drone", drone_id)

    @staticmethod
    def swarm(swarm_id: str) -> "Address":
        return Address("swarm", swarm_id)

    @staticmethod
    def team() -> "Address":
        return Address("team", None)

    def text(self) -> str:
        if self.kind == "team":
            return "team"
        return f"{self.kind}:{self.target}"


@dataclass(frozen=True)
class Command:
    """An actionable instruction carried by a SwarmMessage.

    Known names: ARM, TAKEOFF, LAND, LAND_VOTE, RTB, GOTO, TRACK, FOLLOW.
    ARM doubles as the mission-activation macro: it may carry a goto point,
    an engagement mode (TRACK/FOLLOW/SEARCH) and a target-location hint.
    """

    name: str
    point: tuple[float, float, float] | None = None
    mode: str | None = None
    hint: tuple[float, float, float] | None = None

    def args_text(self) -> str:
        parts = []
        if self.point is not None:
            parts.append("goto:%.2f,%.2f,%.2f" % self.point)
        if self.mode is not None:
            parts.append(f"mode:{self.mode}")
        if self.hint is not None:
            parts.append("hint:%.2f,%.2f,%.2f" % self.hint)
        return ";".join(parts) if parts else "-"


@dataclass(frozen=True)
class Event:
    """An observation-level report (target found/lost, complex behavior)."""

    kind: str  # TargetFound | TargetLost | PersonEnteredCar | PersonExitedCar
    location: tuple[float, float, float] | None = None
    target_class: str | None = None
    reporter: str | None = None

    @property
    def name(self) -> str:
        return self.kind

    def args_text(self) -> str:
        parts = []
        if self.target_class is not None:
            parts.append(f"class:{self.target_class}")
        if self.location is not None:
            parts.append("at:%.2f,%.2f,%.2f" % self.location)
        if self.reporter is not None:
            parts.append(f"by:{self.reporter}")
        return ";".join(parts) if parts else "-"


Payload = Command | Event


@dataclass
class SwarmMessage:
    priority: Priority
    sender: str
    to: Address
    payload: Payload
    sent_at: float = 0.0
    id: int | None = None  # assigned on submission to the network
    size: int = 0

    def __post_init__(self) -> None:
        if self.size <= 0:
            self.size = 24 + len(self.payload_text())

    def payload_text(self) -> str:
        name = self.payload.name if isinstance(self.payload, Event) else self.payload.name
        return (
            f"t={self.sent_at:.3f} pri={self.priority.letter} from={self.sender} "
            f"to={self.to.text()} cmd={name} args={self.payload.args_text()}"
        )


@dataclass(frozen=True)
class NetworkParams:
    comm_range: float = 150.0
    loss_base: float = 0.0
    loss_range_exponent: float = 2.0
    bandwidth: int = 1024  # bytes per tick per link
    latency: int = 1  # ticks
    relay_enabled: bool = True
    gcs_range_factor: float = 10.0  # the GCS radio is stronger

    def violations(self) -> list[str]:
        out = []
        if self.comm_range <= 0:
            out.append("network.comm_range must be > 0")
        if not 0.0 <= self.loss_base < 1.0:
            out.append("network.loss_base must be in [0, 1)")
        if self.latency < 1:
            out.append("network.latency must be >= 1")
        return out


@dataclass(frozen=True)
class LinkState:
    endpoints: tuple[str, str]
    distance: float
    up: bool


@dataclass(frozen=True)
class DropRecord:
    message: SwarmMessage
    recipient: str
    reason: str  # "no-link" | "loss" | "unknown-recipient"


def node_range(node: str, params: NetworkParams) -> float:
    if node == GCS_ID:
        return params.comm_range * params.gcs_range_factor
    return params.comm_range


def link_range(a: str, b: str, params: NetworkParams) -> float:
    # A high-power endpoint carries the link in both directions.
    return max(node_range(a, params), node_range(b, params))


def hop_loss_probability(distance: float, a: str, b: str, params: NetworkParams) -> float:
    rng = link_range(a, b, params)
    p = params.loss_base + (1.0 - params.loss_base) * (distance / rng) ** params.loss_range_exponent
    return min(1.0, max(0.0, p))


def connectivity(positions: dict[str, Vec3], params: NetworkParams) -> list[LinkState]:
    """One LinkState per unordered node pair; up iff distance <= link range."""
    nodes = sorted(positions)
    links = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            d = dist3d(positions[a], positions[b])
            links.append(LinkState((a, b), d, d <= link_range(a, b, params)))
    return links


def message_rate_audit(
    log: list[tuple[float, SwarmMessage]], duration: float
) -> dict[Priority, float]:
    """Average send rate per priority tier, counting unique message ids."""
    if duration <= 0:
        raise ValueError("duration must be > 0")
    seen: dict[Priority, set[int]] = {p: set() for p in Priority}
    for _, msg in log:
        seen[msg.priority].add(msg.id if msg.id is not None else id(msg))
    return {p: len(ids) / duration for p, ids in seen.items()}


def _adjacency(positions: dict[str, Vec3], params: NetworkParams) -> dict[str, list[tuple[str, float]]]:
    nodes = sorted(positions)
    adj: dict[str, list[tuple[str, float]]] = {n: [] for n in nodes}
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            d = dist3d(positions[a], positions[b])
            if d <= link_range(a, b, params):
                adj[a].append((b, d))
                adj[b].append((a, d))
    return adj


def shortest_path(
    adj: dict[str, list[tuple[str, float]]], src: str, dst: str
) -> list[tuple[str, str, float]] | None:
    """Minimum-hop path as a list of (a, b, distance) hops; None if unreachable."""
    if src == dst:
        return []
    # BFS over up-links; hop count is the routing metric.
    prev: dict[str, tuple[str, float]] = {}
    frontier = [src]
    visited = {src}
    while frontier:
        nxt = []
        for node in frontier:
            for neigh, d in adj.get(node, ()):
                if neigh in visited:
                    continue
                visited.add(neigh)
                prev[neigh] = (node, d)
                if neigh == dst:
                    hops: list[tuple[str, str, float]] = []
                    cur = dst
                    while cur != src:
                        p, dd = prev[cur]
                        hops.append((p, cur, dd))
                        cur = p
                    hops.reverse()
                    return hops
                nxt.append(neigh)
        frontier = nxt
    return None


@dataclass
class _PendingPair:
    seq: int
    message: SwarmMessage
    recipient: str


class AdhocNetwork:
    """Per-tick message transport with priority queueing and loss.

    deliver() is called exactly once per simulation tick and is a single
    logical transaction; determinism comes from sorted iteration plus a
    seeded RNG consumed in (message id, recipient) order.
    """

    def __init__(
        self,
        params: NetworkParams,
        seed: int = 0,
        swarm_members: dict[str, list[str]] | None = None,
        team: list[str] | None = None,
    ) -> None:
        self.params = params
        self.rng = random.Random(seed)
        self.swarm_members = dict(swarm_members or {})
        self.team = list(team or [])
        self.tick = 0
        self._next_id = 0
        self._next_seq = 0
        self._queue: list[_PendingPair] = []
        self._in_flight: list[tuple[int, int, str, SwarmMessage]] = []  # heap (due, id, rcpt, msg)

    def set_membership(self, swarm_members: dict[str, list[str]], team: list[str]) -> None:
        self.swarm_members = dict(swarm_members)
        self.team = list(team)

    def has_queued(self) -> bool:
        return bool(self._queue) or bool(self._in_flight)

    def expand(self, msg: SwarmMessage) -> list[str]:
        to = msg.to
        if to.kind == "drone":
            if to.target not in self.team and to.target != GCS_ID:
                raise KeyError(f"unknown recipient id: {to.target}")
            targets = [to.target]
        elif to.kind == "swarm":
            if to.target not in self.swarm_members:
                raise KeyError(f"unknown recipient id: {to.target}")
            targets = list(self.swarm_members[to.target])
        else:
            targets = list(self.team)
        return sorted(t for t in targets if t != msg.sender)

    def submit(self, messages: list[SwarmMessage]) -> None:
        """Assign ids and enqueue (message, recipient) pairs for this tick."""
        for msg in messages:
            if msg.id is None:
                msg.id = self._next_id
                self._next_id += 1
            for rcpt in self.expand(msg):
                self._queue.append(_PendingPair(self._next_seq, msg, rcpt))
                self._next_seq += 1

    def deliver(
        self,
        messages: list[SwarmMessage],
        positions: dict[str, Vec3],
    ) -> tuple[dict[str, list[SwarmMessage]], list[DropRecord]]:
        """Advance one tick: admit, route, drop, and mature deliveries."""
        self.tick += 1
        self.submit(messages)
        dropped: list[DropRecord] = []

        if self._queue:
            adj = _adjacency(positions, self.params) if self.params.relay_enabled else None
            budgets: dict[tuple[str, str], int] = {}
            blocked: set[tuple[str, str]] = set()
            admitted: list[tuple[_PendingPair, list[tuple[str, str, float]]]] = []
            deferred: list[_PendingPair] = []

            # Admission: strict priority, FIFO within priority. A link that
            # defers a pair is closed to everything behind it this tick.
            order = sorted(self._queue, key=lambda p: (-int(p.message.priority), p.seq))
            for pair in order:
                msg = pair.message
                if pair.recipient not in positions:
                    dropped.append(DropRecord(msg, pair.recipient, "unknown-recipient"))
                    continue
                if self.params.relay_enabled:
                    path = shortest_path(adj, msg.sender, pair.recipient)
                else:
                    d = dist3d(positions[msg.sender], positions[pair.recipient])
                    path = (
                        [(msg.sender, pair.recipient, d)]
                        if d <= link_range(msg.sender, pair.recipient, self.params)
                        else None
                    )
                if path is None:
                    dropped.append(DropRecord(msg, pair.recipient, "no-link"))
                    continue
                keys = [tuple(sorted((a, b))) for a, b, _ in path]
                ok = not any(k in blocked for k in keys)
                if ok:
                    for k in keys:
                        if budgets.get(k, self.params.bandwidth) < msg.size:
                            ok = False
                            break
                if not ok:
                    blocked.update(keys)
                    deferred.append(pair)
                    continue
                for k in keys:
                    budgets[k] = budgets.get(k, self.params.bandwidth) - msg.size
                admitted.append((pair, path))

            # Loss draws consume the stream in sorted (message id, recipient)
            # order so internal scheduling can never perturb outcomes.
            admitted.sort(key=lambda it: (it[0].message.id, it[0].recipient))
            for pair, path in admitted:
                lost = False
                for a, b, d in path:
                    if self.rng.random() < hop_loss_probability(d, a, b, self.params):
                        lost = True
                        break
                if lost:
                    dropped.append(DropRecord(pair.message, pair.recipient, "loss"))
                else:
                    due = self.tick + self.params.latency
                    heapq.heappush(
                        self._in_flight, (due, pair.message.id, pair.recipient, pair.message)
                    )
            self._queue = deferred

        delivered: dict[str, list[SwarmMessage]] = {}
        while self._in_flight and self._in_flight[0][0] <= self.tick:
            _, _, rcpt, msg = heapq.heappop(self._in_flight)
            delivered.setdefault(rcpt, []).append(msg)
        return delivered, dropped
