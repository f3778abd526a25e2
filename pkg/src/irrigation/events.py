"""Append-only event log and the status view derived from it.

Every state change in the system is an event with a contiguous sequence
number. The live server status is a pure fold over the event stream, so
replaying any prefix of a log reproduces the status the server had at
that point. Events serialize to canonical NDJSON (sorted keys, compact
separators) so equal logs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Iterable, Union

from .rulebase import PumpDuty, ReadingError, SensorReading

EVENT_SCHEMA_VERSION = 1


class EventError(ValueError):
    """Malformed event document."""


class SequenceGap(EventError):
    """Event sequence numbers are not contiguous."""


@dataclass(frozen=True)
class ReadingRecorded:
    seq: int
    reading: SensorReading

    @property
    def at_ms(self) -> int:
        return self.reading.timestamp_ms


@dataclass(frozen=True)
class DecisionMade:
    seq: int
    duty: PumpDuty
    on_time_ms: int
    mode_kind: str
    at_ms: int


@dataclass(frozen=True)
class PumpStateChanged:
    seq: int
    on: bool
    at_ms: int
    on_time_ms: int | None = None  # planned run time, present when turning on


@dataclass(frozen=True)
class OverrideReceived:
    seq: int
    duty: PumpDuty
    source: str
    at_ms: int


@dataclass(frozen=True)
class ModeChanged:
    seq: int
    mode_kind: str
    at_ms: int


Event = Union[ReadingRecorded, DecisionMade, PumpStateChanged, OverrideReceived, ModeChanged]


def event_to_dict(event: Event) -> dict:
    base = {"v": EVENT_SCHEMA_VERSION, "seq": event.seq}
    if isinstance(event, ReadingRecorded):
        r = event.reading
        base.update(
            type="reading_recorded",
            t_c=r.temperature_c,
            h_pct=r.humidity_pct,
            m_pct=r.soil_moisture_pct,
            ts_ms=r.timestamp_ms,
        )
    elif isinstance(event, DecisionMade):
        base.update(
            type="decision_made",
            duty=event.duty.value,
            on_time_ms=event.on_time_ms,
            mode=event.mode_kind,
            at_ms=event.at_ms,
        )
    elif isinstance(event, PumpStateChanged):
        base.update(type="pump_state_changed", on=event.on, at_ms=event.at_ms)
        if event.on_time_ms is not None:
            base["on_time_ms"] = event.on_time_ms
    elif isinstance(event, OverrideReceived):
        base.update(
            type="override_received",
            duty=event.duty.value,
            source=event.source,
            at_ms=event.at_ms,
        )
    elif isinstance(event, ModeChanged):
        base.update(type="mode_changed", mode=event.mode_kind, at_ms=event.at_ms)
    else:
        raise EventError(f"unknown event type {type(event).__name__}")
    return base


def _require(doc: dict, key: str, kinds) -> object:
    if key not in doc:
        raise EventError(f"missing field {key!r}")
    value = doc[key]
    if isinstance(value, bool) and kinds is not bool:
        raise EventError(f"field {key!r} has wrong type bool")
    if not isinstance(value, kinds):
        raise EventError(f"field {key!r} has wrong type {type(value).__name__}")
    return value


def _duty(doc: dict) -> PumpDuty:
    raw = _require(doc, "duty", str)
    try:
        return PumpDuty(raw)
    except ValueError as exc:
        raise EventError(f"unknown duty {raw!r}") from exc


def event_from_dict(doc: dict) -> Event:
    if not isinstance(doc, dict):
        raise EventError("event must be a JSON object")
    if doc.get("v") != EVENT_SCHEMA_VERSION:
        raise EventError(f"unsupported event schema version {doc.get('v')!r}")
    seq = _require(doc, "seq", int)
    kind = doc.get("type")
    if kind == "reading_recorded":
        try:
            reading = SensorReading(
                float(_require(doc, "t_c", (int, float))),
                float(_require(doc, "h_pct", (int, float))),
                float(_require(doc, "m_pct", (int, float))),
                _require(doc, "ts_ms", int),
            )
        except ReadingError as exc:
            raise EventError(str(exc)) from exc
        return ReadingRecorded(seq, reading)
    if kind == "decision_made":
        return DecisionMade(
            seq,
            _duty(doc),
            _require(doc, "on_time_ms", int),
            _require(doc, "mode", str),
            _require(doc, "at_ms", int),
        )
    if kind == "pump_state_changed":
        on = _require(doc, "on", bool)
        on_time = doc.get("on_time_ms")
        if on_time is not None and not isinstance(on_time, int):
            raise EventError("on_time_ms must be an integer")
        return PumpStateChanged(seq, on, _require(doc, "at_ms", int), on_time)
    if kind == "override_received":
        return OverrideReceived(
            seq, _duty(doc), _require(doc, "source", str), _require(doc, "at_ms", int)
        )
    if kind == "mode_changed":
        return ModeChanged(seq, _require(doc, "mode", str), _require(doc, "at_ms", int))
    raise EventError(f"unknown event type {kind!r}")


def encode_event(event: Event) -> str:
    """One canonical NDJSON line, newline-terminated."""
    return json.dumps(event_to_dict(event), sort_keys=True, separators=(",", ":")) + "\n"


def decode_event_line(line: str | bytes) -> Event:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EventError(f"event line is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventError(f"event line is not valid JSON: {exc}") from exc
    return event_from_dict(doc)


@dataclass(frozen=True)
class ServerStatus:
    """Snapshot of the system as of the last applied event."""

    mode_kind: str = "rule"
    latest_reading: SensorReading | None = None
    pump_on: bool = False
    pump_deadline_ms: int | None = None
    last_decision: tuple[PumpDuty, int] | None = None
    event_count: int = 0
    last_event_at_ms: int | None = None

    @property
    def remaining_pump_ms(self) -> int:
        if not self.pump_on or self.pump_deadline_ms is None:
            return 0
        return max(0, self.pump_deadline_ms - (self.last_event_at_ms or 0))

    def to_dict(self) -> dict:
        r = self.latest_reading
        duty, on_time = self.last_decision if self.last_decision else (None, None)
        return {
            "mode": self.mode_kind,
            "reading": None
            if r is None
            else {
                "t_c": r.temperature_c,
                "h_pct": r.humidity_pct,
                "m_pct": r.soil_moisture_pct,
                "ts_ms": r.timestamp_ms,
            },
            "pump_on": self.pump_on,
            "remaining_pump_ms": self.remaining_pump_ms,
            "pump_deadline_ms": self.pump_deadline_ms if self.pump_on else None,
            "last_decision": None
            if duty is None
            else {"duty": duty.value, "on_time_ms": on_time},
            "event_count": self.event_count,
            "as_of_ms": self.last_event_at_ms,
        }


def apply_event(status: ServerStatus, event: Event) -> ServerStatus:
    """Pure fold step: the status after one more event."""
    status = replace(
        status, event_count=status.event_count + 1, last_event_at_ms=event.at_ms
    )
    if isinstance(event, ReadingRecorded):
        return replace(status, latest_reading=event.reading)
    if isinstance(event, DecisionMade):
        return replace(
            status,
            last_decision=(event.duty, event.on_time_ms),
            mode_kind=event.mode_kind,
        )
    if isinstance(event, PumpStateChanged):
        if event.on:
            deadline = (
                event.at_ms + event.on_time_ms if event.on_time_ms is not None else None
            )
            return replace(status, pump_on=True, pump_deadline_ms=deadline)
        return replace(status, pump_on=False, pump_deadline_ms=None)
    if isinstance(event, OverrideReceived):
        return replace(
            status,
            mode_kind="manual",
            last_decision=(event.duty, status.last_decision[1] if status.last_decision else 0),
        )
    if isinstance(event, ModeChanged):
        return replace(status, mode_kind=event.mode_kind)
    raise EventError(f"unknown event type {type(event).__name__}")


def replay(events: Iterable[Event], initial: ServerStatus | None = None) -> ServerStatus:
    """Fold a (prefix of a) log into the status it implies.

    Verifies sequence contiguity along the way.
    """
    status = initial if initial is not None else ServerStatus()
    expected = None
    for event in events:
        if expected is not None and event.seq != expected:
            raise SequenceGap(f"expected seq {expected}, got {event.seq}")
        expected = event.seq + 1
        status = apply_event(status, event)
    return status


class EventLog:
    """In-memory event list with an optional NDJSON file behind it."""

    def __init__(self, path: str | Path | None = None):
        self._events: list[Event] = []
        self._path = Path(path) if path is not None else None
        self._fh: IO[str] | None = None
        if self._path is not None:
            if self._path.exists():
                for line in self._path.read_text().splitlines():
                    if line.strip():
                        self._check_and_store(decode_event_line(line))
            self._fh = self._path.open("a")

    def _check_and_store(self, event: Event) -> None:
        expected = self._events[-1].seq + 1 if self._events else event.seq
        if self._events and event.seq != expected:
            raise SequenceGap(f"expected seq {expected}, got {event.seq}")
        self._events.append(event)

    @property
    def next_seq(self) -> int:
        return self._events[-1].seq + 1 if self._events else 0

    def append(self, event: Event) -> None:
        self._check_and_store(event)
        if self._fh is not None:
            self._fh.write(encode_event(event))
            self._fh.flush()

    def events(self) -> list[Event]:
        return list(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def encode_log(events: Iterable[Event]) -> str:
    return "".join(encode_event(e) for e in events)
