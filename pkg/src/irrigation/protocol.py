"""Line-oriented wire protocol for sensor nodes and status consumers.

One JSON object per newline-terminated UTF-8 line. Decode failures are
typed so a server can log and keep the connection alive: framing problems,
unknown message types, and schema violations are distinct errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .rulebase import PumpDuty, ReadingError, SensorReading

PROTOCOL_VERSION = 1


class ProtocolError(ValueError):
    """Base class for wire decode failures."""


class MalformedFrame(ProtocolError):
    """Line is not a UTF-8 JSON object."""


class UnknownMessageType(ProtocolError):
    """JSON object carries no recognized "type" field."""


class SchemaViolation(ProtocolError):
    """Recognized message type with missing or invalid fields."""


@dataclass(frozen=True)
class ReadingMessage:
    reading: SensorReading


@dataclass(frozen=True)
class OverrideMessage:
    duty: PumpDuty
    source: str = "remote"


@dataclass(frozen=True)
class StatusMessage:
    status: dict


Message = ReadingMessage | OverrideMessage | StatusMessage


def encode_message(message: Message) -> str:
    """Canonical newline-terminated line for any message type."""
    if isinstance(message, ReadingMessage):
        r = message.reading
        doc = {
            "v": PROTOCOL_VERSION,
            "type": "reading",
            "t_c": r.temperature_c,
            "h_pct": r.humidity_pct,
            "m_pct": r.soil_moisture_pct,
            "ts_ms": r.timestamp_ms,
        }
    elif isinstance(message, OverrideMessage):
        doc = {
            "v": PROTOCOL_VERSION,
            "type": "override",
            "duty": message.duty.value,
            "source": message.source,
        }
    elif isinstance(message, StatusMessage):
        doc = {"v": PROTOCOL_VERSION, "type": "status", "status": message.status}
    else:
        raise TypeError(f"cannot encode {type(message).__name__}")
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _number(doc: dict, key: str) -> float:
    if key not in doc:
        raise SchemaViolation(f"missing field {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(f"field {key!r} must be a number")
    return float(value)


def decode_message(line: str | bytes) -> Message:
    """Parse one line; raises a typed ProtocolError subclass on any failure."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"line is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"line is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedFrame("line must be a JSON object")

    kind = doc.get("type")
    if kind == "reading":
        ts = doc.get("ts_ms", 0)
        if isinstance(ts, bool) or not isinstance(ts, int):
            raise SchemaViolation("field 'ts_ms' must be an integer")
        try:
            reading = SensorReading(
                _number(doc, "t_c"), _number(doc, "h_pct"), _number(doc, "m_pct"), ts
            )
        except ReadingError as exc:
            raise SchemaViolation(str(exc)) from exc
        return ReadingMessage(reading)
    if kind == "override":
        raw = doc.get("duty")
        if not isinstance(raw, str):
            raise SchemaViolation("field 'duty' must be a string")
        try:
            duty = PumpDuty(raw)
        except ValueError as exc:
            raise SchemaViolation(f"unknown duty {raw!r}") from exc
        source = doc.get("source", "remote")
        if not isinstance(source, str):
            raise SchemaViolation("field 'source' must be a string")
        return OverrideMessage(duty, source)
    if kind == "status":
        status = doc.get("status")
        if not isinstance(status, dict):
            raise SchemaViolation("field 'status' must be an object")
        return StatusMessage(status)
    raise UnknownMessageType(f"unknown message type {kind!r}")
