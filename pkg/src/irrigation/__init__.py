"""Closed-loop smart irrigation: rule-base oracle, MLP pump controller,
plant simulator, and telemetry service."""

__version__ = "0.1.0"

from .rulebase import Level, PumpDuty, SensorReading, classify  # noqa: F401
