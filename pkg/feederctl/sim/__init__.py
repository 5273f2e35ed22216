"""Closed-loop simulation: scenario setup, engine, log and metrics."""

from .setup import ScenarioSetup, load_feeder, load_partition, load_scenario
from .log import SimLog
from .engine import der_lag_step, run
from .metrics import (
    build_summary,
    der_participation,
    locality_metric,
    settling_time,
    steady_state_violations,
    tracking_error_before_changes,
)

__all__ = [
    "ScenarioSetup",
    "load_feeder",
    "load_partition",
    "load_scenario",
    "SimLog",
    "der_lag_step",
    "run",
    "build_summary",
    "der_participation",
    "locality_metric",
    "settling_time",
    "steady_state_violations",
    "tracking_error_before_changes",
]
