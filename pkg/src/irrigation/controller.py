"""Sense-decide-pump cycle as a pure state machine.

One logical owner calls step() with non-decreasing timestamps; the machine
emits PumpCommand values for the host to execute. Decisions are frozen
while a pump cycle runs, and a minimum restart gap keeps the pump from
chattering at band boundaries. Operator overrides bypass the gap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .mlp import DEFAULT_RANGES, NetworkWeights, NormalizationRanges, predict_duty
from .rulebase import PumpDuty, SensorReading, classify

MODE_AUTO = "auto"
MODE_RULE = "rule"
MODE_MANUAL = "manual"


class TimeRegression(ValueError):
    """step() was called with a timestamp earlier than the previous call."""


class ModeConfigError(ValueError):
    """Controller mode is inconsistent (e.g. auto without weights)."""


@dataclass(frozen=True)
class ControllerMode:
    kind: str
    manual_duty: PumpDuty | None = None

    def __post_init__(self) -> None:
        if self.kind not in (MODE_AUTO, MODE_RULE, MODE_MANUAL):
            raise ModeConfigError(f"unknown mode kind {self.kind!r}")
        if self.kind == MODE_MANUAL and self.manual_duty is None:
            raise ModeConfigError("manual mode requires a duty")
        if self.kind != MODE_MANUAL and self.manual_duty is not None:
            raise ModeConfigError(f"{self.kind} mode must not carry a duty")

    @classmethod
    def auto(cls) -> "ControllerMode":
        return cls(MODE_AUTO)

    @classmethod
    def rule_only(cls) -> "ControllerMode":
        return cls(MODE_RULE)

    @classmethod
    def manual(cls, duty: PumpDuty) -> "ControllerMode":
        return cls(MODE_MANUAL, duty)


@dataclass(frozen=True)
class CycleConfig:
    period_s: float = 10.0
    poll_interval_s: float = 2.0
    min_restart_gap_s: float = 5.0

    def __post_init__(self) -> None:
        if self.period_s <= 0 or self.poll_interval_s <= 0 or self.min_restart_gap_s <= 0:
            raise ValueError("all cycle durations must be positive")
        if self.poll_interval_s > self.period_s:
            raise ValueError("poll_interval_s must not exceed period_s")


@dataclass(frozen=True)
class PumpCommand:
    on: bool
    at_ms: int


@dataclass(frozen=True)
class ControllerState:
    mode: ControllerMode
    pumping: bool = False
    remaining_ms: int = 0
    last_pump_stop_ms: int | None = None
    last_decision: tuple[PumpDuty, int] | None = None
    last_step_ms: int | None = None
    decision_count: int = 0

    @classmethod
    def initial(cls, mode: ControllerMode) -> "ControllerState":
        return cls(mode=mode)


def on_time_for(duty: PumpDuty, config: CycleConfig) -> int:
    """Duty fraction of the fixed period, in milliseconds."""
    return round(duty.fraction * config.period_s * 1000.0)


def decide(
    reading: SensorReading,
    mode: ControllerMode,
    weights: NetworkWeights | None,
    config: CycleConfig,
    ranges: NormalizationRanges = DEFAULT_RANGES,
) -> tuple[PumpDuty, int]:
    """Pick a duty for this reading and the pump on-time it implies."""
    if mode.kind == MODE_AUTO:
        if weights is None:
            raise ModeConfigError("auto mode requires trained network weights")
        duty = predict_duty(weights, reading, ranges)
    elif mode.kind == MODE_RULE:
        duty = classify(reading)
    else:
        duty = mode.manual_duty
    return duty, on_time_for(duty, config)


def step(
    state: ControllerState,
    now_ms: int,
    reading: SensorReading | None,
    config: CycleConfig,
    weights: NetworkWeights | None = None,
    ranges: NormalizationRanges = DEFAULT_RANGES,
) -> tuple[ControllerState, list[PumpCommand]]:
    """Advance the machine to now_ms, optionally with a fresh reading.

    A running pump counts down and emits PumpOff exactly once at expiry;
    a fresh reading while idle may start a new cycle if the restart gap
    has passed. Pure: same inputs always yield the same outputs.
    """
    if state.last_step_ms is not None and now_ms < state.last_step_ms:
        raise TimeRegression(f"time went backwards: {now_ms} < {state.last_step_ms}")

    commands: list[PumpCommand] = []

    if state.pumping:
        elapsed = now_ms - (state.last_step_ms if state.last_step_ms is not None else now_ms)
        remaining = state.remaining_ms - elapsed
        if remaining <= 0:
            stop_at = now_ms - max(0, -remaining)
            commands.append(PumpCommand(on=False, at_ms=stop_at))
            state = replace(
                state, pumping=False, remaining_ms=0, last_pump_stop_ms=stop_at
            )
        else:
            state = replace(state, remaining_ms=remaining)

    if not state.pumping and reading is not None:
        gap_ms = round(config.min_restart_gap_s * 1000.0)
        gap_open = (
            state.last_pump_stop_ms is None
            or now_ms - state.last_pump_stop_ms >= gap_ms
        )
        if gap_open:
            duty, on_time = decide(reading, state.mode, weights, config, ranges)
            state = replace(
                state,
                last_decision=(duty, on_time),
                decision_count=state.decision_count + 1,
            )
            if duty is not PumpDuty.OFF and on_time > 0:
                commands.append(PumpCommand(on=True, at_ms=now_ms))
                state = replace(state, pumping=True, remaining_ms=on_time)

    return replace(state, last_step_ms=now_ms), commands


def apply_override(
    state: ControllerState,
    duty: PumpDuty,
    now_ms: int,
    config: CycleConfig,
) -> tuple[ControllerState, list[PumpCommand]]:
    """Operator command: switch to manual mode and match the pump immediately."""
    commands: list[PumpCommand] = []
    if state.pumping:
        commands.append(PumpCommand(on=False, at_ms=now_ms))
        state = replace(
            state, pumping=False, remaining_ms=0, last_pump_stop_ms=now_ms
        )
    on_time = on_time_for(duty, config)
    state = replace(
        state, mode=ControllerMode.manual(duty), last_decision=(duty, on_time)
    )
    if duty is not PumpDuty.OFF and on_time > 0:
        commands.append(PumpCommand(on=True, at_ms=now_ms))
        state = replace(state, pumping=True, remaining_ms=on_time)
    if state.last_step_ms is None or now_ms > state.last_step_ms:
        state = replace(state, last_step_ms=now_ms)
    return state, commands


def set_mode(state: ControllerState, mode: ControllerMode) -> ControllerState:
    """Change decision mode without touching a running pump cycle."""
    return replace(state, mode=mode)
