import pytest
from hypothesis import given, settings, strategies as st

from irrigation.controller import (
    ControllerMode,
    ControllerState,
    CycleConfig,
    ModeConfigError,
    PumpCommand,
    TimeRegression,
    apply_override,
    decide,
    on_time_for,
    set_mode,
    step,
)
from irrigation.rulebase import PumpDuty, SensorReading

CYCLE = CycleConfig()  # 10 s period, 2 s poll, 5 s restart gap
RULE = ControllerMode.rule_only()

DRY = SensorReading(20, 30, 5)  # rule base says full
MOIST = SensorReading(30, 55, 15)  # rule base says half
WET = SensorReading(40, 80, 25)  # rule base says off


class TestOnTime:
    def test_full_is_whole_period(self):
        assert on_time_for(PumpDuty.FULL, CYCLE) == 10000

    def test_half_is_half_period(self):
        assert on_time_for(PumpDuty.HALF, CYCLE) == 5000

    def test_off_is_zero(self):
        assert on_time_for(PumpDuty.OFF, CYCLE) == 0

    def test_scales_with_period(self):
        assert on_time_for(PumpDuty.HALF, CycleConfig(period_s=30.0)) == 15000


class TestMode:
    def test_manual_requires_duty(self):
        with pytest.raises(ModeConfigError):
            ControllerMode("manual")

    def test_non_manual_must_not_carry_duty(self):
        with pytest.raises(ModeConfigError):
            ControllerMode("rule", PumpDuty.FULL)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ModeConfigError):
            ControllerMode("turbo")

    def test_auto_decide_requires_weights(self):
        with pytest.raises(ModeConfigError):
            decide(DRY, ControllerMode.auto(), None, CYCLE)

    def test_manual_decide_ignores_reading(self):
        duty, on_time = decide(WET, ControllerMode.manual(PumpDuty.FULL), None, CYCLE)
        assert duty is PumpDuty.FULL and on_time == 10000


class TestStep:
    def test_dry_reading_starts_full_cycle(self):
        state, commands = step(ControllerState.initial(RULE), 0, DRY, CYCLE)
        assert commands == [PumpCommand(on=True, at_ms=0)]
        assert state.pumping and state.remaining_ms == 10000
        assert state.last_decision == (PumpDuty.FULL, 10000)
        assert state.decision_count == 1

    def test_wet_reading_decides_off_without_commands(self):
        state, commands = step(ControllerState.initial(RULE), 0, WET, CYCLE)
        assert commands == []
        assert not state.pumping
        assert state.last_decision == (PumpDuty.OFF, 0)
        assert state.decision_count == 1

    def test_no_reading_no_decision(self):
        state, commands = step(ControllerState.initial(RULE), 0, None, CYCLE)
        assert commands == []
        assert state.decision_count == 0

    def test_decision_frozen_while_pumping(self):
        state, _ = step(ControllerState.initial(RULE), 0, DRY, CYCLE)
        state, commands = step(state, 2000, WET, CYCLE)
        assert commands == []
        assert state.pumping and state.remaining_ms == 8000
        assert state.last_decision == (PumpDuty.FULL, 10000)
        assert state.decision_count == 1

    def test_pump_off_emitted_exactly_at_expiry(self):
        state, _ = step(ControllerState.initial(RULE), 0, MOIST, CYCLE)
        assert state.remaining_ms == 5000
        state, commands = step(state, 6000, None, CYCLE)
        assert commands == [PumpCommand(on=False, at_ms=5000)]
        assert not state.pumping
        assert state.last_pump_stop_ms == 5000

    def test_restart_gap_blocks_new_cycle(self):
        state, _ = step(ControllerState.initial(RULE), 0, MOIST, CYCLE)
        state, _ = step(state, 5000, None, CYCLE)  # pump stops here
        # 2 s after stopping, still inside the 5 s restart gap: the
        # reading is ignored entirely, no new decision is recorded.
        state, commands = step(state, 7000, DRY, CYCLE)
        assert commands == []
        assert state.decision_count == 1
        # 5 s after stopping the gap is open again.
        state, commands = step(state, 10000, DRY, CYCLE)
        assert commands == [PumpCommand(on=True, at_ms=10000)]
        assert state.decision_count == 2

    def test_expiry_and_restart_same_step(self):
        state, _ = step(ControllerState.initial(RULE), 0, DRY, CYCLE)
        # Pump expires at 10 s; gap from that stop has not elapsed at 10 s,
        # so only the off command fires.
        state, commands = step(state, 10000, DRY, CYCLE)
        assert commands == [PumpCommand(on=False, at_ms=10000)]

    def test_time_regression_rejected(self):
        state, _ = step(ControllerState.initial(RULE), 1000, None, CYCLE)
        with pytest.raises(TimeRegression):
            step(state, 500, None, CYCLE)

    def test_step_is_pure(self):
        state = ControllerState.initial(RULE)
        out1 = step(state, 0, DRY, CYCLE)
        out2 = step(state, 0, DRY, CYCLE)
        assert out1 == out2
        assert state.decision_count == 0  # input untouched


class TestOverride:
    def test_override_starts_pump_and_switches_to_manual(self):
        state, commands = apply_override(
            ControllerState.initial(RULE), PumpDuty.FULL, 1000, CYCLE
        )
        assert commands == [PumpCommand(on=True, at_ms=1000)]
        assert state.mode == ControllerMode.manual(PumpDuty.FULL)
        assert state.pumping and state.remaining_ms == 10000

    def test_override_off_stops_running_pump(self):
        state, _ = step(ControllerState.initial(RULE), 0, DRY, CYCLE)
        state, commands = apply_override(state, PumpDuty.OFF, 3000, CYCLE)
        assert commands == [PumpCommand(on=False, at_ms=3000)]
        assert not state.pumping
        assert state.mode == ControllerMode.manual(PumpDuty.OFF)

    def test_override_replaces_running_cycle(self):
        state, _ = step(ControllerState.initial(RULE), 0, DRY, CYCLE)
        state, commands = apply_override(state, PumpDuty.HALF, 3000, CYCLE)
        assert commands == [
            PumpCommand(on=False, at_ms=3000),
            PumpCommand(on=True, at_ms=3000),
        ]
        assert state.remaining_ms == 5000

    def test_override_bypasses_restart_gap(self):
        state, _ = step(ControllerState.initial(RULE), 0, MOIST, CYCLE)
        state, _ = step(state, 5000, None, CYCLE)  # stop at 5 s
        state, commands = apply_override(state, PumpDuty.FULL, 6000, CYCLE)
        assert PumpCommand(on=True, at_ms=6000) in commands

    def test_set_mode_keeps_pump_running(self):
        state, _ = step(ControllerState.initial(RULE), 0, DRY, CYCLE)
        state = set_mode(state, ControllerMode.manual(PumpDuty.OFF))
        assert state.pumping and state.remaining_ms == 10000


@st.composite
def schedules(draw):
    """A monotone sequence of (time, optional reading) steps."""
    n = draw(st.integers(1, 40))
    times = sorted(draw(st.lists(st.integers(0, 120000), min_size=n, max_size=n)))
    readings = draw(
        st.lists(
            st.sampled_from([None, DRY, MOIST, WET]), min_size=n, max_size=n
        )
    )
    return list(zip(times, readings))


class TestAlternation:
    @settings(max_examples=200, deadline=None)
    @given(schedules())
    def test_pump_commands_strictly_alternate(self, schedule):
        state = ControllerState.initial(RULE)
        commands = []
        for now_ms, reading in schedule:
            state, out = step(state, now_ms, reading, CYCLE)
            commands.extend(out)
        # Every on is followed (if anything follows) by an off, and
        # command timestamps never decrease.
        for first, second in zip(commands, commands[1:]):
            assert first.on != second.on
            assert second.at_ms >= first.at_ms
        if commands:
            assert commands[0].on
