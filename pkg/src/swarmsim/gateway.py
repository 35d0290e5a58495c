"""Live ground-control gateway and log replay.

Telemetry frames are built exclusively from Snapshot/event records in the
event log, so a live stream and a later replay of the same log produce
byte-identical frame sequences. Wire protocol: JSON text frames over a
WebSocket (see docs/protocol.md), versioned with a "v" field.
"""

from __future__ import annotations

import json
import threading
import time as wallclock
from dataclasses import dataclass

from . import events as ev
from .engine import OperatorCommand, Simulation
from .events import EventLog, EventRecord

PROTOCOL_VERSION = 1
_FEED_KINDS = (
    ev.KIND_STATE,
    ev.KIND_BEHAVIOR,
    ev.KIND_COLLISION,
    ev.KIND_ARRIVAL,
    ev.KIND_PHASE,
)
_MAX_FEED = 20

MISSION_COMMANDS = ("ARM", "TAKEOFF", "LAND", "RTB", "GOTO", "MissionEnd")
SIM_COMMANDS = ("Pause", "Resume", "SetSpeed")


def telemetry_frame(snapshot: EventRecord, feed: list[EventRecord]) -> str:
    """Render one Snapshot record (plus the event feed since the previous
    snapshot) as a telemetry frame."""
    data = json.loads(snapshot.detail)
    entities = [
        {
            "id": e[0],
            "kind": e[1],
            "x": e[2],
            "y": e[3],
            "z": e[4],
            "yaw": e[5],
            "carried_by": e[6] or None,
        }
        for e in data["e"]
    ]
    drones = [
        {
            "id": d[0],
            "swarm": d[1],
            "states": d[2].split("+") if d[2] else [],
            "lock": d[3] or None,
            "endurance": d[4],
        }
        for d in data["d"]
    ]
    links = [{"a": a, "b": b} for a, b in data["l"]]
    frame = {
        "v": PROTOCOL_VERSION,
        "type": "telemetry",
        "t": round(snapshot.time, 3),
        "entities": entities,
        "drones": drones,
        "links": links,
        "events": [r.line() for r in feed[-_MAX_FEED:]],
    }
    return json.dumps(frame, sort_keys=True, separators=(",", ":"))


def replay_frames(log: EventLog):
    """Yield (sim_time, frame_json) for every snapshot in a completed log."""
    feed: list[EventRecord] = []
    for rec in log:
        if rec.kind == ev.KIND_SNAPSHOT:
            yield rec.time, telemetry_frame(rec, feed)
            feed = []
        elif rec.kind in _FEED_KINDS:
            feed.append(rec)


def replay(log: EventLog, speed: float, sink, realtime: bool = True) -> int:
    """Re-emit telemetry frames at speed x real-time; returns frame count."""
    if speed <= 0:
        raise ValueError("speed must be > 0")
    count = 0
    start_wall = wallclock.monotonic()
    start_sim: float | None = None
    for t, frame in replay_frames(log):
        if realtime:
            if start_sim is None:
                start_sim = t
            due = start_wall + (t - start_sim) / speed
            delay = due - wallclock.monotonic()
            if delay > 0:
                wallclock.sleep(delay)
        sink(frame)
        count += 1
    return count


@dataclass(eq=False)
class _Client:
    conn: object
    lock: threading.Lock


class Gateway:
    """Runs a Simulation paced to wall-clock and serves the GCS protocol.

    The sim loop stays single-threaded; socket handlers communicate with it
    only through Simulation.inject_command() and the event log.
    """

    def __init__(self, sim: Simulation, port: int, speed: float = 1.0) -> None:
        self.sim = sim
        self.port = port
        self.speed = speed
        self.paused = False
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()
        self._stop = threading.Event()
        self._server = None
        self._log_cursor = 0
        self._feed: list[EventRecord] = []
        self._last_frame: str | None = None
        self._thread: threading.Thread | None = None

    # -- socket side --------------------------------------------------------

    def _handle_command(self, text: str) -> str:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            return json.dumps({"v": PROTOCOL_VERSION, "type": "err", "reason": "malformed frame"})
        if not isinstance(obj, dict) or obj.get("type") != "cmd":
            return json.dumps({"v": PROTOCOL_VERSION, "type": "err", "reason": "not a cmd frame"})
        name = obj.get("name")
        if name == "Pause":
            self.paused = True
            return self._ack(name)
        if name == "Resume":
            self.paused = False
            return self._ack(name)
        if name == "SetSpeed":
            factor = obj.get("factor")
            if not isinstance(factor, (int, float)) or factor <= 0:
                return self._err("SetSpeed needs a positive factor")
            self.speed = float(factor)
            return self._ack(name)
        if name not in MISSION_COMMANDS:
            return self._err(f"unknown command {name!r}")
        target = obj.get("target") or "team"
        known = target == "team" or target in self.sim.tactical or target in self.sim.policies
        if not known:
            return self._err(f"unknown target {target!r}")
        point = obj.get("point")
        if point is not None:
            if not (isinstance(point, list) and len(point) == 3):
                return self._err("point must be [x, y, z]")
            point = tuple(float(v) for v in point)
        if name == "GOTO" and point is None:
            return self._err("GOTO needs a point")
        at = obj.get("at")
        if at is not None and not isinstance(at, (int, float)):
            return self._err("at must be a sim time")
        self.sim.inject_command(
            OperatorCommand(name=name, target=target, point=point, at=at)
        )
        return self._ack(name)

    def _ack(self, name: str) -> str:
        return json.dumps({"v": PROTOCOL_VERSION, "type": "ack", "name": name})

    def _err(self, reason: str) -> str:
        return json.dumps({"v": PROTOCOL_VERSION, "type": "err", "reason": reason})

    def _client_loop(self, conn) -> None:
        client = _Client(conn, threading.Lock())
        with self._clients_lock:
            self._clients.add(client)
        if self._last_frame is not None:
            with client.lock:
                conn.send(self._last_frame)
        try:
            for message in conn:
                reply = self._handle_command(message)
                with client.lock:
                    conn.send(reply)
        except Exception:
            pass
        finally:
            with self._clients_lock:
                self._clients.discard(client)

    def _broadcast(self, frame: str) -> None:
        self._last_frame = frame
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            try:
                with c.lock:
                    c.conn.send(frame)
            except Exception:
                with self._clients_lock:
                    self._clients.discard(c)

    # -- sim side -------------------------------------------------------------

    def _pump_new_records(self) -> None:
        records = self.sim.log.records
        while self._log_cursor < len(records):
            rec = records[self._log_cursor]
            self._log_cursor += 1
            if rec.kind == ev.KIND_SNAPSHOT:
                self._broadcast(telemetry_frame(rec, self._feed))
                self._feed = []
            elif rec.kind in _FEED_KINDS:
                self._feed.append(rec)

    def _sim_loop(self) -> None:
        last_wall = wallclock.monotonic()
        sim_debt = 0.0
        while not self._stop.is_set():
            now = wallclock.monotonic()
            if self.paused:
                last_wall = now
                # Repeat the current frame so clients see a frozen sim time.
                if self._last_frame is not None:
                    self._broadcast(self._last_frame)
                self._stop.wait(0.1)
                continue
            sim_debt += (now - last_wall) * self.speed
            last_wall = now
            while sim_debt >= self.sim.dt and not self.sim.done:
                self.sim.tick()
                sim_debt -= self.sim.dt
                self._pump_new_records()
            if self.sim.done:
                sim_debt = 0.0
                self._stop.wait(0.2)
            else:
                self._stop.wait(self.sim.dt / max(self.speed, 1e-6) / 2)

    # -- lifecycle --------------------------------------------------------------

    def start(self) -> None:
        from websockets.sync.server import serve

        self._server = serve(self._client_loop, "127.0.0.1", self.port)
        self._thread = threading.Thread(target=self._sim_loop, daemon=True)
        self._thread.start()
        self._serve_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._serve_thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._server is not None:
            self._server.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_until_done(self) -> None:
        """Blocking variant for the CLI: run until the mission ends."""
        self.start()
        try:
            while not self.sim.done:
                wallclock.sleep(0.2)
            wallclock.sleep(1.0)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()


class ReplayGateway:
    """Serves telemetry frames from a completed log over the same protocol.

    Commands are rejected (nothing to steer); Pause/Resume/SetSpeed work.
    """

    def __init__(self, log: EventLog, port: int, speed: float = 1.0) -> None:
        self.log = log
        self.port = port
        self.speed = speed
        self.paused = False
        self._stop = threading.Event()
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()
        self._last_frame: str | None = None
        self._server = None

    def _client_loop(self, conn) -> None:
        client = _Client(conn, threading.Lock())
        with self._clients_lock:
            self._clients.add(client)
        try:
            for message in conn:
                try:
                    obj = json.loads(message)
                except json.JSONDecodeError:
                    obj = None
                reply: dict
                if obj and obj.get("type") == "cmd" and obj.get("name") == "Pause":
                    self.paused = True
                    reply = {"v": PROTOCOL_VERSION, "type": "ack", "name": "Pause"}
                elif obj and obj.get("type") == "cmd" and obj.get("name") == "Resume":
                    self.paused = False
                    reply = {"v": PROTOCOL_VERSION, "type": "ack", "name": "Resume"}
                elif (
                    obj
                    and obj.get("type") == "cmd"
                    and obj.get("name") == "SetSpeed"
                    and isinstance(obj.get("factor"), (int, float))
                    and obj["factor"] > 0
                ):
                    self.speed = float(obj["factor"])
                    reply = {"v": PROTOCOL_VERSION, "type": "ack", "name": "SetSpeed"}
                else:
                    reply = {
                        "v": PROTOCOL_VERSION,
                        "type": "err",
                        "reason": "replay accepts Pause/Resume/SetSpeed only",
                    }
                with client.lock:
                    conn.send(json.dumps(reply))
        except Exception:
            pass
        finally:
            with self._clients_lock:
                self._clients.discard(client)

    def _broadcast(self, frame: str) -> None:
        self._last_frame = frame
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            try:
                with c.lock:
                    c.conn.send(frame)
            except Exception:
                pass

    def run(self) -> None:
        from websockets.sync.server import serve

        self._server = serve(self._client_loop, "127.0.0.1", self.port)
        serve_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        serve_thread.start()
        try:
            frames = list(replay_frames(self.log))
            i = 0
            last_wall = wallclock.monotonic()
            sim_ahead = 0.0
            while i < len(frames) and not self._stop.is_set():
                now = wallclock.monotonic()
                if self.paused:
                    last_wall = now
                    if self._last_frame is not None:
                        self._broadcast(self._last_frame)
                    wallclock.sleep(0.1)
                    continue
                sim_ahead += (now - last_wall) * self.speed
                last_wall = now
                while i < len(frames) and (
                    i == 0 or frames[i][0] - frames[0][0] <= sim_ahead
                ):
                    self._broadcast(frames[i][1])
                    i += 1
                wallclock.sleep(0.02)
        finally:
            self._server.shutdown()

    def stop(self) -> None:
        self._stop.set()
