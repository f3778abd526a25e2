"""Telemetry service hosting the controller.

Sensor nodes push readings over a TCP line protocol; the dashboard talks
HTTP (GET /status, POST /override, POST /mode, GET /events) and a
WebSocket (/stream) that pushes a fresh status on every change. All state
mutations funnel through one asyncio lock so event sequence numbers are a
total order, and the live status is maintained by the same event fold
that replay uses.
"""

from __future__ import annotations

import asyncio
import logging
import time
from typing import Literal

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from . import controller
from .controller import (
    ControllerMode,
    ControllerState,
    CycleConfig,
    ModeConfigError,
    TimeRegression,
)
from .events import (
    DecisionMade,
    Event,
    EventLog,
    ModeChanged,
    OverrideReceived,
    PumpStateChanged,
    ReadingRecorded,
    ServerStatus,
    apply_event,
    encode_event,
    replay,
)
from .mlp import DEFAULT_RANGES, NetworkWeights, NormalizationRanges
from .protocol import (
    MalformedFrame,
    OverrideMessage,
    ProtocolError,
    ReadingMessage,
    decode_message,
)
from .rulebase import PumpDuty, ReadingError, SensorReading

log = logging.getLogger(__name__)


def handle_reading(
    ctrl: ControllerState,
    next_seq: int,
    reading: SensorReading,
    cycle: CycleConfig,
    weights: NetworkWeights | None,
    ranges: NormalizationRanges = DEFAULT_RANGES,
) -> tuple[ControllerState, list[Event]]:
    """Advance the hosted controller with one reading; pure."""
    events: list[Event] = [ReadingRecorded(next_seq, reading)]
    seq = next_seq + 1
    decisions_before = ctrl.decision_count
    ctrl, commands = controller.step(
        ctrl, reading.timestamp_ms, reading, cycle, weights, ranges
    )
    for command in (c for c in commands if not c.on):
        events.append(PumpStateChanged(seq, False, command.at_ms))
        seq += 1
    if ctrl.decision_count > decisions_before:
        duty, on_time = ctrl.last_decision
        events.append(
            DecisionMade(seq, duty, on_time, ctrl.mode.kind, reading.timestamp_ms)
        )
        seq += 1
    for command in (c for c in commands if c.on):
        events.append(PumpStateChanged(seq, True, command.at_ms, ctrl.last_decision[1]))
        seq += 1
    return ctrl, events


def handle_override(
    ctrl: ControllerState,
    next_seq: int,
    duty: PumpDuty,
    source: str,
    now_ms: int,
    cycle: CycleConfig,
) -> tuple[ControllerState, list[Event]]:
    """Apply an operator override; pure."""
    events: list[Event] = [OverrideReceived(next_seq, duty, source, now_ms)]
    seq = next_seq + 1
    ctrl, commands = controller.apply_override(ctrl, duty, now_ms, cycle)
    for command in commands:
        on_time = ctrl.last_decision[1] if command.on else None
        events.append(PumpStateChanged(seq, command.on, command.at_ms, on_time))
        seq += 1
    return ctrl, events


class IrrigationService:
    """Owns the event log, the controller, and the status fanout."""

    def __init__(
        self,
        mode: ControllerMode,
        cycle: CycleConfig | None = None,
        weights: NetworkWeights | None = None,
        ranges: NormalizationRanges = DEFAULT_RANGES,
        log_path: str | None = None,
    ):
        if mode.kind == controller.MODE_AUTO and weights is None:
            raise ModeConfigError("auto mode requires trained network weights")
        self.cycle = cycle if cycle is not None else CycleConfig()
        self.weights = weights
        self.ranges = ranges
        self.log = EventLog(log_path)
        self.status: ServerStatus = replay(self.log)
        self._lock = asyncio.Lock()
        self._subscribers: set[asyncio.Queue] = set()
        if len(self.log) == 0:
            startup = ModeChanged(0, mode.kind, self._wall_ms())
            self.log.append(startup)
            self.status = apply_event(self.status, startup)
        # Rebuild what the controller needs from the replayed status. The
        # controller clock runs on reading timestamps, so it is seeded from
        # the latest reading rather than wall-clocked admin events.
        reading = self.status.latest_reading
        self.ctrl = ControllerState(
            mode=mode,
            pumping=self.status.pump_on,
            remaining_ms=self.status.remaining_pump_ms,
            last_decision=self.status.last_decision,
            last_step_ms=reading.timestamp_ms if reading is not None else None,
        )

    @staticmethod
    def _wall_ms() -> int:
        return int(time.time() * 1000)

    def _now_ms(self) -> int:
        # Never step the controller backwards even if sensor timestamps
        # run ahead of the wall clock (e.g. replayed simulations).
        wall = self._wall_ms()
        last = self.ctrl.last_step_ms
        return wall if last is None else max(wall, last)

    def _commit(self, ctrl: ControllerState, events: list[Event]) -> None:
        self.ctrl = ctrl
        for event in events:
            self.log.append(event)
            self.status = apply_event(self.status, event)
        self._broadcast()

    def _broadcast(self) -> None:
        snapshot = self.status.to_dict()
        for queue in self._subscribers:
            queue.put_nowait(snapshot)

    async def submit_reading(self, reading: SensorReading) -> list[Event]:
        async with self._lock:
            ctrl, events = handle_reading(
                self.ctrl, self.log.next_seq, reading, self.cycle, self.weights, self.ranges
            )
            self._commit(ctrl, events)
            return events

    async def submit_override(self, duty: PumpDuty, source: str) -> list[Event]:
        async with self._lock:
            ctrl, events = handle_override(
                self.ctrl, self.log.next_seq, duty, source, self._now_ms(), self.cycle
            )
            self._commit(ctrl, events)
            return events

    async def set_mode(self, kind: str) -> list[Event]:
        async with self._lock:
            if kind == controller.MODE_AUTO and self.weights is None:
                raise ModeConfigError("auto mode requires trained network weights")
            mode = (
                ControllerMode.manual(PumpDuty.OFF)
                if kind == controller.MODE_MANUAL
                else ControllerMode(kind)
            )
            ctrl = controller.set_mode(self.ctrl, mode)
            event = ModeChanged(self.log.next_seq, kind, self._now_ms())
            self._commit(ctrl, [event])
            return [event]

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self._subscribers.add(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        self._subscribers.discard(queue)

    def close(self) -> None:
        self.log.close()


class OverrideRequest(BaseModel):
    duty: Literal["full", "half", "off"]
    source: str = "dashboard"


class ModeRequest(BaseModel):
    mode: Literal["auto", "rule", "manual"]


def create_app(service: IrrigationService) -> FastAPI:
    app = FastAPI(title="smart-irrigation telemetry")
    app.state.service = service

    @app.get("/status")
    async def get_status() -> dict:
        return service.status.to_dict()

    @app.post("/override")
    async def post_override(request: OverrideRequest) -> dict:
        events = await service.submit_override(PumpDuty(request.duty), request.source)
        return {"accepted": True, "events": [e.seq for e in events]}

    @app.post("/mode")
    async def post_mode(request: ModeRequest) -> dict:
        try:
            events = await service.set_mode(request.mode)
        except ModeConfigError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"accepted": True, "events": [e.seq for e in events]}

    @app.get("/events")
    async def get_events(from_: int = Query(0, alias="from")) -> PlainTextResponse:
        lines = "".join(
            encode_event(e) for e in service.log.events() if e.seq >= from_
        )
        return PlainTextResponse(lines, media_type="application/x-ndjson")

    @app.websocket("/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        queue = service.subscribe()
        try:
            await ws.send_json(service.status.to_dict())
            while True:
                snapshot = await queue.get()
                await ws.send_json(snapshot)
        except WebSocketDisconnect:
            pass
        finally:
            service.unsubscribe(queue)

    return app


async def handle_sensor_connection(
    service: IrrigationService,
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
) -> None:
    """One sensor node: NDJSON lines in, error lines out, survives bad input."""
    peer = writer.get_extra_info("peername")
    log.info("sensor connected: %s", peer)
    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            if not line.strip():
                continue
            try:
                message = decode_message(line)
                if isinstance(message, ReadingMessage):
                    await service.submit_reading(message.reading)
                elif isinstance(message, OverrideMessage):
                    await service.submit_override(message.duty, message.source)
                else:
                    raise MalformedFrame("only reading/override accepted on this port")
            except (ProtocolError, ReadingError, TimeRegression) as exc:
                writer.write(
                    (
                        f'{{"error":"{type(exc).__name__}"}}\n'
                    ).encode()
                )
                await writer.drain()
    except (ConnectionResetError, asyncio.IncompleteReadError):
        pass
    finally:
        writer.close()
        log.info("sensor disconnected: %s", peer)


async def start_sensor_server(
    service: IrrigationService, host: str, port: int
) -> asyncio.AbstractServer:
    return await asyncio.start_server(
        lambda r, w: handle_sensor_connection(service, r, w), host, port
    )
