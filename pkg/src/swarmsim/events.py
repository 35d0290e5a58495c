"""Canonical, line-delimited event log: the evidence base for scoring,
golden-file diffing, and replay.

One record per line: `<t>|<kind>|<subject>|<detail>` with t formatted to
three decimals. Records are strictly append-only and time-ordered.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

KIND_HEADER = "Header"
KIND_STATE = "StateTransition"
KIND_OBS = "ObservationSummary"
KIND_SENT = "MessageSent"
KIND_DELIVERED = "MessageDelivered"
KIND_DROPPED = "MessageDropped"
KIND_BEHAVIOR = "ComplexBehavior"
KIND_COLLISION = "Collision"
KIND_ARRIVAL = "Arrival"
KIND_PHASE = "MissionPhase"
KIND_SNAPSHOT = "Snapshot"

KINDS = (
    KIND_HEADER,
    KIND_STATE,
    KIND_OBS,
    KIND_SENT,
    KIND_DELIVERED,
    KIND_DROPPED,
    KIND_BEHAVIOR,
    KIND_COLLISION,
    KIND_ARRIVAL,
    KIND_PHASE,
    KIND_SNAPSHOT,
)


@dataclass(frozen=True)
class EventRecord:
    time: float
    kind: str
    subject: str
    detail: str

    def line(self) -> str:
        return f"{self.time:.3f}|{self.kind}|{self.subject}|{self.detail}"


def parse_record(line: str) -> EventRecord:
    parts = line.rstrip("\n").split("|", 3)
    if len(parts) != 4:
        raise ValueError(f"malformed event record: {line!r}")
    return EventRecord(float(parts[0]), parts[1], parts[2], parts[3])


class EventLog:
    """Append-only, time-ordered record store."""

    def __init__(self) -> None:
        self.records: list[EventRecord] = []

    def append(self, time: float, kind: str, subject: str, detail: str) -> EventRecord:
        if self.records and time < self.records[-1].time - 1e-9:
            raise ValueError("event log must stay time-ordered")
        rec = EventRecord(time, kind, subject, detail)
        self.records.append(rec)
        return rec

    def __iter__(self) -> Iterator[EventRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def by_kind(self, kind: str) -> list[EventRecord]:
        return [r for r in self.records if r.kind == kind]

    def text(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.text())

    @staticmethod
    def from_lines(lines: Iterable[str]) -> "EventLog":
        log = EventLog()
        for line in lines:
            if line.strip():
                log.records.append(parse_record(line))
        return log

    @staticmethod
    def load(path: str) -> "EventLog":
        with open(path, "r", encoding="utf-8") as fh:
            return EventLog.from_lines(fh)
