"""Deterministic stand-in for the farm and pump hardware.

First-order soil moisture dynamics (infiltration while the pump runs,
evapotranspiration scaled by ambient temperature and dryness), a sinusoidal
diurnal climate, and seeded Gaussian sensor noise. run_closed_loop() wires
the plant to the controller and returns the full ordered event log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .controller import (
    ControllerMode,
    ControllerState,
    CycleConfig,
    step,
)
from .events import (
    DecisionMade,
    Event,
    PumpStateChanged,
    ReadingRecorded,
)
from .mlp import DEFAULT_RANGES, NetworkWeights, NormalizationRanges
from .rulebase import TEMPERATURE_WINDOW_C, SensorReading

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class ClimateProfile:
    t_mean_c: float = 25.0
    t_amp_c: float = 10.0
    h_mean_pct: float = 60.0
    h_amp_pct: float = 20.0

    @classmethod
    def constant(cls, t_c: float, h_pct: float) -> "ClimateProfile":
        return cls(t_mean_c=t_c, t_amp_c=0.0, h_mean_pct=h_pct, h_amp_pct=0.0)


@dataclass(frozen=True)
class PlantParams:
    k_infiltration: float = 0.8  # %/s while pump on
    # Max ET of 0.02 %/s keeps a high-band (>20 %) start above the band
    # floor for over an hour at desk-scale climate; larger values drain
    # the soil into pumping range within a single run.
    k_et: float = 0.02
    dt_s: float = 1.0
    noise_sigma: tuple[float, float, float] = (0.3, 1.0, 0.5)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_infiltration <= 0:
            raise ValueError("k_infiltration must be positive")
        if self.k_et < 0:
            raise ValueError("k_et must be non-negative")
        if self.dt_s <= 0:
            raise ValueError("dt_s must be positive")
        if any(s < 0 for s in self.noise_sigma):
            raise ValueError("noise_sigma components must be non-negative")


@dataclass
class SimState:
    soil_moisture_true: float
    climate: ClimateProfile
    rng: np.random.Generator
    sim_time_s: float = 0.0

    @classmethod
    def create(
        cls,
        soil_moisture: float,
        climate: ClimateProfile | None = None,
        seed: int = 0,
    ) -> "SimState":
        if not 0.0 <= soil_moisture <= 100.0:
            raise ValueError("soil moisture must be in [0, 100]")
        return cls(
            soil_moisture_true=soil_moisture,
            climate=climate if climate is not None else ClimateProfile(),
            rng=np.random.default_rng(seed),
        )


def ambient(sim_time_s: float, profile: ClimateProfile) -> tuple[float, float]:
    """Diurnal temperature and humidity; humidity runs in opposite phase."""
    phase = math.sin(2.0 * math.pi * sim_time_s / SECONDS_PER_DAY)
    t_lo, t_hi = TEMPERATURE_WINDOW_C
    t = min(max(profile.t_mean_c + profile.t_amp_c * phase, t_lo), t_hi)
    h = min(max(profile.h_mean_pct - profile.h_amp_pct * phase, 0.0), 100.0)
    return t, h


def soil_rate(t_c: float, h_pct: float, pump_on: bool, params: PlantParams) -> float:
    """Net soil moisture change in %/s for the current ambient conditions."""
    infiltration = params.k_infiltration if pump_on else 0.0
    et = params.k_et * max(0.0, t_c / 50.0) * (1.0 - h_pct / 100.0)
    return infiltration - et


def step_soil(state: SimState, pump_on: bool, params: PlantParams) -> SimState:
    """One explicit-Euler step of the moisture balance, clamped to [0, 100]."""
    t, h = ambient(state.sim_time_s, state.climate)
    moisture = state.soil_moisture_true + soil_rate(t, h, pump_on, params) * params.dt_s
    return replace(
        state,
        soil_moisture_true=min(max(moisture, 0.0), 100.0),
        sim_time_s=state.sim_time_s + params.dt_s,
    )


def read_sensors(state: SimState, params: PlantParams) -> SensorReading:
    """True plant state plus seeded Gaussian noise, clamped to valid ranges.

    Always draws three noise samples so the rng stream stays aligned
    regardless of the sigma values.
    """
    t, h = ambient(state.sim_time_s, state.climate)
    noise = state.rng.normal(0.0, 1.0, 3) * np.array(params.noise_sigma)
    t_lo, t_hi = TEMPERATURE_WINDOW_C
    return SensorReading(
        temperature_c=float(min(max(t + noise[0], t_lo), t_hi)),
        humidity_pct=float(min(max(h + noise[1], 0.0), 100.0)),
        soil_moisture_pct=float(min(max(state.soil_moisture_true + noise[2], 0.0), 100.0)),
        timestamp_ms=round(state.sim_time_s * 1000.0),
    )


def run_closed_loop(
    initial: SimState,
    params: PlantParams,
    cycle: CycleConfig,
    mode: ControllerMode,
    duration_s: float,
    weights: NetworkWeights | None = None,
    ranges: NormalizationRanges = DEFAULT_RANGES,
) -> list[Event]:
    """Fixed-step loop: read sensors -> controller step -> pump flag -> soil step."""
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    state = initial
    ctrl = ControllerState.initial(mode)
    events: list[Event] = []
    seq = 0
    pump_on = False
    steps = int(round(duration_s / params.dt_s))
    poll_every = max(1, int(round(cycle.poll_interval_s / params.dt_s)))

    for i in range(steps):
        now_ms = round(state.sim_time_s * 1000.0)
        reading = None
        if i % poll_every == 0:
            reading = read_sensors(state, params)
            events.append(ReadingRecorded(seq, reading))
            seq += 1
        decisions_before = ctrl.decision_count
        ctrl, commands = step(ctrl, now_ms, reading, cycle, weights, ranges)
        # Pump-off at expiry precedes this step's decision chronologically.
        for command in (c for c in commands if not c.on):
            events.append(PumpStateChanged(seq, False, command.at_ms))
            seq += 1
            pump_on = False
        if ctrl.decision_count > decisions_before:
            duty, on_time = ctrl.last_decision
            events.append(DecisionMade(seq, duty, on_time, mode.kind, now_ms))
            seq += 1
        for command in (c for c in commands if c.on):
            events.append(
                PumpStateChanged(seq, True, command.at_ms, ctrl.last_decision[1])
            )
            seq += 1
            pump_on = True
        state = step_soil(state, pump_on, params)

    return events
