"""Rule table mapping sensor bands to a pump duty.

This is the ground-truth oracle the network is trained against, and the
decision source in rule-only mode. Band boundaries (25/35 C, 40/70 %RH,
10/20 % soil) assign the boundary value itself to the middle band, so the
three bands partition the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

TEMPERATURE_WINDOW_C = (-20.0, 60.0)


class ReadingError(ValueError):
    """Sensor reading is non-finite or outside its plausible window."""


class Level(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class PumpDuty(Enum):
    OFF = "off"
    HALF = "half"
    FULL = "full"

    @property
    def fraction(self) -> float:
        return _DUTY_FRACTION[self]


_DUTY_FRACTION = {PumpDuty.OFF: 0.0, PumpDuty.HALF: 0.5, PumpDuty.FULL: 1.0}


@dataclass(frozen=True)
class SensorReading:
    temperature_c: float
    humidity_pct: float
    soil_moisture_pct: float
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        for name in ("temperature_c", "humidity_pct", "soil_moisture_pct"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ReadingError(f"{name} must be finite, got {value!r}")
        lo, hi = TEMPERATURE_WINDOW_C
        if not lo <= self.temperature_c <= hi:
            raise ReadingError(
                f"temperature_c {self.temperature_c} outside [{lo}, {hi}]"
            )
        if not 0.0 <= self.humidity_pct <= 100.0:
            raise ReadingError(f"humidity_pct {self.humidity_pct} outside [0, 100]")
        if not 0.0 <= self.soil_moisture_pct <= 100.0:
            raise ReadingError(
                f"soil_moisture_pct {self.soil_moisture_pct} outside [0, 100]"
            )


def band_temperature(temperature_c: float) -> Level:
    if temperature_c < 25.0:
        return Level.LOW
    if temperature_c <= 35.0:
        return Level.MEDIUM
    return Level.HIGH


def band_humidity(humidity_pct: float) -> Level:
    if humidity_pct < 40.0:
        return Level.LOW
    if humidity_pct <= 70.0:
        return Level.MEDIUM
    return Level.HIGH


def band_soil(soil_moisture_pct: float) -> Level:
    if soil_moisture_pct < 10.0:
        return Level.LOW
    if soil_moisture_pct <= 20.0:
        return Level.MEDIUM
    return Level.HIGH


def band(reading: SensorReading) -> tuple[Level, Level, Level]:
    """Band all three inputs of a validated reading."""
    return (
        band_temperature(reading.temperature_c),
        band_humidity(reading.humidity_pct),
        band_soil(reading.soil_moisture_pct),
    )


# The three explicit rows of the rule table; everything else is Off.
_DUTY_BY_BANDS = {
    (Level.LOW, Level.LOW, Level.LOW): PumpDuty.FULL,
    (Level.LOW, Level.LOW, Level.MEDIUM): PumpDuty.HALF,
    (Level.MEDIUM, Level.MEDIUM, Level.MEDIUM): PumpDuty.HALF,
}


def duty_for_bands(
    temperature: Level, humidity: Level, soil: Level
) -> PumpDuty:
    return _DUTY_BY_BANDS.get((temperature, humidity, soil), PumpDuty.OFF)


def classify(reading: SensorReading) -> PumpDuty:
    """Pump duty for a reading, per the rule table."""
    return duty_for_bands(*band(reading))


def rule_table() -> list[tuple[tuple[Level, Level, Level], PumpDuty]]:
    """All 27 band combinations with their duty, in a stable order."""
    levels = (Level.LOW, Level.MEDIUM, Level.HIGH)
    return [
        ((t, h, m), duty_for_bands(t, h, m))
        for t in levels
        for h in levels
        for m in levels
    ]
