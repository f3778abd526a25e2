import math

import pytest
from hypothesis import given, strategies as st

from irrigation.rulebase import (
    Level,
    PumpDuty,
    ReadingError,
    SensorReading,
    band,
    classify,
    duty_for_bands,
    rule_table,
)

L, M, H = Level.LOW, Level.MEDIUM, Level.HIGH


valid_readings = st.builds(
    SensorReading,
    temperature_c=st.floats(-20, 60, allow_nan=False),
    humidity_pct=st.floats(0, 100, allow_nan=False),
    soil_moisture_pct=st.floats(0, 100, allow_nan=False),
)


class TestSensorReading:
    def test_valid_reading_accepted(self):
        r = SensorReading(20.0, 30.0, 5.0, timestamp_ms=123)
        assert r.temperature_c == 20.0
        assert r.timestamp_ms == 123

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"temperature_c": float("nan")},
            {"temperature_c": float("inf")},
            {"temperature_c": -25.0},
            {"temperature_c": 61.0},
            {"humidity_pct": -1.0},
            {"humidity_pct": 140.0},
            {"soil_moisture_pct": 101.0},
            {"soil_moisture_pct": float("nan")},
        ],
    )
    def test_invalid_reading_rejected(self, kwargs):
        fields = dict(temperature_c=20.0, humidity_pct=30.0, soil_moisture_pct=5.0)
        fields.update(kwargs)
        with pytest.raises(ReadingError):
            SensorReading(**fields)


class TestBand:
    def test_all_low(self):
        assert band(SensorReading(20, 30, 5)) == (L, L, L)

    def test_boundaries_fall_in_medium(self):
        assert band(SensorReading(25, 40, 10)) == (M, M, M)
        assert band(SensorReading(35, 70, 20)) == (M, M, M)

    def test_all_high(self):
        assert band(SensorReading(40, 80, 25)) == (H, H, H)

    @given(valid_readings)
    def test_banding_is_total(self, reading):
        t, h, m = band(reading)
        assert isinstance(t, Level) and isinstance(h, Level) and isinstance(m, Level)


class TestClassify:
    def test_low_low_low_is_full(self):
        assert classify(SensorReading(20, 30, 5)) is PumpDuty.FULL

    def test_medium_row_is_half(self):
        assert classify(SensorReading(30, 55, 15)) is PumpDuty.HALF

    def test_low_low_medium_is_half(self):
        assert classify(SensorReading(20, 30, 15)) is PumpDuty.HALF

    def test_unlisted_combination_is_off(self):
        # (Medium, Low, Low) matches no explicit row
        assert classify(SensorReading(30, 30, 5)) is PumpDuty.OFF

    def test_all_high_is_off(self):
        assert classify(SensorReading(40, 80, 25)) is PumpDuty.OFF

    @given(valid_readings)
    def test_classify_is_total(self, reading):
        assert classify(reading) in PumpDuty

    @given(
        st.floats(-20, 60, allow_nan=False),
        st.floats(0, 100, allow_nan=False),
        st.floats(0, 100, allow_nan=False).filter(lambda m: m > 20),
    )
    def test_wet_soil_always_off(self, t, h, m):
        assert classify(SensorReading(t, h, m)) is PumpDuty.OFF


class TestRuleTable:
    def test_27_combinations(self):
        table = rule_table()
        assert len(table) == 27
        assert len({bands for bands, _ in table}) == 27

    def test_duty_histogram(self):
        # 3 of the 27 combinations pump; the other 24 are off.
        duties = [duty for _, duty in rule_table()]
        assert duties.count(PumpDuty.FULL) == 1
        assert duties.count(PumpDuty.HALF) == 2
        assert duties.count(PumpDuty.OFF) == 24

    def test_matches_pointwise(self):
        for bands, duty in rule_table():
            assert duty_for_bands(*bands) is duty


class TestPumpDuty:
    def test_fractions(self):
        assert PumpDuty.OFF.fraction == 0.0
        assert PumpDuty.HALF.fraction == 0.5
        assert PumpDuty.FULL.fraction == 1.0
        assert all(math.isfinite(d.fraction) for d in PumpDuty)
