"""Tests for run metrics and the text summary."""

import numpy as np
import pytest

from feederctl.sim import (
    SimLog,
    build_summary,
    der_participation,
    locality_metric,
    settling_time,
    steady_state_violations,
    tracking_error_before_changes,
)

DISTURBANCE = {"time_on_s": 5.0, "time_off_s": None, "bus": "n5", "p_w": 100e3, "power_factor": 0.9}


def _make_log(columns, step: float = 0.1, count: int = 101, **metadata) -> SimLog:
    t = np.arange(count) * step
    rows = []
    for k in range(count):
        row = {"time_s": float(t[k])}
        for name, values in columns.items():
            row[name] = float(values(t[k]) if callable(values) else values[k])
        rows.append(row)
    return SimLog.from_rows(rows, metadata)


def _make_disturbance_log(first_change: float, second_change: float, ramp_second: bool = False) -> SimLog:
    def second(t):
        if t < 5.0 - 1e-9:
            return 0.0
        return second_change * (t - 4.0) if ramp_second else second_change

    return _make_log(
        {
            "der_D1_p_w": lambda t: first_change if t >= 5.0 - 1e-9 else 0.0,
            "der_D2_p_w": second,
        },
        der_area={"D1": "CA1", "D2": "CA2"},
        areas=["CA1", "CA2"],
        disturbances=[DISTURBANCE],
    )


class TestSettlingTime:
    def test_constant_channel(self):
        log = _make_log({"dp0_w": lambda t: 5.0})
        assert settling_time(log, "dp0_w", band=0.1) == 0.0

    def test_first_order_response(self):
        log = _make_log({"y": lambda t: 1.0 - np.exp(-t)}, step=0.01, count=1001)
        assert settling_time(log, "y", band=0.02) == pytest.approx(-np.log(0.02), abs=0.02)

    def test_window_starts_at_last_reference_change(self):
        log = _make_log(
            {"y": lambda t: 0.0 if t < 2.0 else 1.0 - np.exp(-(t - 2.0))},
            step=0.01,
            count=1201,
            reference_change_times=[0.0, 2.0],
        )
        assert settling_time(log, "y", band=0.02) == pytest.approx(-np.log(0.02), abs=0.02)

    def test_explicit_target(self):
        log = _make_log({"y": lambda t: 1.0 - np.exp(-t)}, step=0.01, count=1001)
        assert settling_time(log, "y", band=0.02, target=2.0) is None

    def test_never_settles(self):
        log = _make_log({"y": lambda t: float(round(10 * t) % 2)})
        assert settling_time(log, "y", band=0.1) is None

    def test_empty_window(self):
        log = _make_log({"y": lambda t: 0.0})
        assert settling_time(log, "y", band=0.1, start=20.0) is None

    def test_invalid_arguments(self):
        log = _make_log({"y": lambda t: 0.0})
        with pytest.raises(ValueError, match="band"):
            settling_time(log, "y", band=0.0)
        with pytest.raises(ValueError, match="empty"):
            settling_time(SimLog.from_rows([]), "y", band=1.0)
        with pytest.raises(KeyError, match="Unknown channel"):
            settling_time(log, "z", band=1.0)


class TestParticipation:
    def test_shares(self):
        log = _make_disturbance_log(25e3, 75e3)
        shares = der_participation(log)
        assert shares == pytest.approx({"D1": 0.25, "D2": 0.75})
        assert locality_metric(log) == pytest.approx({"CA1": 0.25, "CA2": 0.75})

    def test_shares_sum_to_one_with_opposing_outputs(self):
        log = _make_disturbance_log(-20e3, 120e3)
        fractions = locality_metric(log)
        assert sum(fractions.values()) == pytest.approx(1.0)
        assert fractions["CA1"] == pytest.approx(-0.2)

    def test_no_event(self):
        log = _make_disturbance_log(25e3, 75e3)
        assert der_participation(log, event_index=1) is None
        log.metadata["disturbances"] = []
        assert locality_metric(log) is None

    def test_no_response(self):
        assert locality_metric(_make_disturbance_log(0.0, 0.0)) is None

    def test_not_resettled(self):
        assert locality_metric(_make_disturbance_log(25e3, 75e3, ramp_second=True)) is None

    def test_event_switched_off(self):
        event = dict(DISTURBANCE, time_off_s=8.0)
        log = _make_log(
            {
                "der_D1_p_w": lambda t: 10e3 if 5.0 - 1e-9 <= t < 8.0 - 1e-9 else 0.0,
                "der_D2_p_w": lambda t: 30e3 if 5.0 - 1e-9 <= t < 8.0 - 1e-9 else 0.0,
            },
            der_area={"D1": "CA1", "D2": "CA2"},
            areas=["CA1", "CA2"],
            disturbances=[event],
        )
        assert locality_metric(log) == pytest.approx({"CA1": 0.25, "CA2": 0.75})


class TestTrackingAndViolations:
    def test_tracking_error_uses_rows_before_changes(self):
        error = np.full(101, 1e4)
        error[49] = 300.0
        error[100] = 100.0
        log = _make_log(
            {"dp0_w": error, "ref_dp_w": np.zeros(101)},
            reference_change_times=[0.0, 5.0],
        )
        assert tracking_error_before_changes(log) == pytest.approx(300.0)

    def test_tracking_error_without_changes(self):
        log = _make_log({"dp0_w": lambda t: 200e3 + 50.0, "ref_dp_w": lambda t: 200e3})
        assert tracking_error_before_changes(log) == pytest.approx(50.0)

    def test_steady_state_violations(self):
        log = _make_log({"viol_v_CA1_pu": lambda t: 0.001 if t >= 9.0 - 1e-9 else 0.3, "viol_i_CA1_a": lambda t: 0.0})
        violations = steady_state_violations(log)
        assert violations["viol_v_CA1_pu"] == pytest.approx(0.001)
        assert violations["viol_i_CA1_a"] == 0.0


class TestSummary:
    def _make_run_log(self, **metadata) -> SimLog:
        base = {
            "scenario": "unit",
            "plant": "nonlinear",
            "areas": ["CA1", "CA2"],
            "reference_change_times": [0.0],
            "disturbances": [DISTURBANCE],
            "der_area": {"D1": "CA1", "D2": "CA2"},
        }
        base.update(metadata)
        return _make_log(
            {
                "dp0_w": lambda t: 200e3 * (1.0 - np.exp(-2.0 * t)),
                "ref_dp_w": lambda t: 200e3,
                "viol_v_CA1_pu": lambda t: 0.0,
                "der_D1_p_w": lambda t: 25e3 if t >= 5.0 - 1e-9 else 0.0,
                "der_D2_p_w": lambda t: 75e3 if t >= 5.0 - 1e-9 else 0.0,
            },
            **base,
        )

    def test_overrides_echoed(self):
        summary = build_summary(self._make_run_log(overrides=[["controller.alpha", 0.003]]))
        assert "controller.alpha=0.003" in summary
        assert "Scenario: unit" in summary
        assert "CA2: 75.0%" in summary

    def test_no_overrides(self):
        summary = build_summary(self._make_run_log())
        assert "Overrides: none" in summary
        assert "change at 0 s" in summary

    def test_aborted_run(self):
        summary = build_summary(self._make_run_log(aborted=True, abort_time_s=3.2, abort_reason="diverged"))
        assert "ABORTED at t=3.2 s: diverged" in summary

    def test_empty_log(self):
        summary = build_summary(SimLog.from_rows([], {"scenario": "empty"}))
        assert "Rows: 0" in summary
