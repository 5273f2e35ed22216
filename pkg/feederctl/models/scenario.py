"""Scenario file schema: controller configuration and schedules."""

import copy
import math
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config.defaults import CONTROLLER_DEFAULTS, DUAL_GROUPS


def _check_group_keys(values: Dict[str, float]) -> Dict[str, float]:
    unknown = sorted(set(values) - set(DUAL_GROUPS))
    if unknown:
        raise ValueError(f"Unknown dual groups {unknown}. Available: {list(DUAL_GROUPS)}")
    if any(value < 0 for value in values.values()):
        raise ValueError("Gains and coefficients must be nonnegative")
    return values


class ControllerConfig(BaseModel):
    """Local controller configuration (one area, or the default for all areas)."""
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(CONTROLLER_DEFAULTS["alpha"], ge=0)
    r_primal: float = Field(CONTROLLER_DEFAULTS["r_primal"], ge=0)
    r_dual: float = Field(CONTROLLER_DEFAULTS["r_dual"], ge=0)
    e_p_w: float = Field(CONTROLLER_DEFAULTS["e_p_w"], gt=0)
    e_q_var: float = Field(CONTROLLER_DEFAULTS["e_q_var"], gt=0)
    v_max_pu: float = Field(CONTROLLER_DEFAULTS["v_max_pu"], gt=0)
    v_min_pu: float = Field(CONTROLLER_DEFAULTS["v_min_pu"], gt=0)
    i_max_a: Optional[Union[float, Dict[str, float]]] = Field(
        None, description="Current limit (A), uniform or per line; defaults to line ampacity"
    )
    tracking: bool = True

    # Per dual group step-size gains a_k and regularization coefficients c_k
    gains: Dict[str, float] = Field(default_factory=lambda: dict(CONTROLLER_DEFAULTS["gains"]))
    reg_coefficients: Dict[str, float] = Field(default_factory=dict, description="c_k; default 1/a_k")

    # Enhancements
    kappa_p: Dict[str, float] = Field(default_factory=dict)
    kappa_d: Dict[str, float] = Field(default_factory=dict)
    pid_target: Literal["all", "vder"] = "all"
    lpf_time_constant_s: float = Field(0.0, ge=0)

    @field_validator("gains", mode="before")
    @classmethod
    def _merge_default_gains(cls, value: Any) -> Any:
        if isinstance(value, dict):
            merged = dict(CONTROLLER_DEFAULTS["gains"])
            merged.update(value)
            return merged
        return value

    @field_validator("gains", "reg_coefficients", "kappa_p", "kappa_d")
    @classmethod
    def _known_groups(cls, value: Dict[str, float]) -> Dict[str, float]:
        return _check_group_keys(value)

    @model_validator(mode="after")
    def _check_limits(self) -> "ControllerConfig":
        if self.v_min_pu >= self.v_max_pu:
            raise ValueError("v_min_pu must be below v_max_pu")
        limits = self.i_max_a.values() if isinstance(self.i_max_a, dict) else [self.i_max_a]
        if any(limit is not None and limit <= 0 for limit in limits):
            raise ValueError("i_max_a must be positive")
        return self


class ReferenceEvent(BaseModel):
    """
    Change of the feeder-head set-point.

    A step adds (dp_w, dq_var) at time_s. A stepped ramp adds
    rate_w_per_s * step_period_s every step_period_s from time_s until end_s.
    """
    model_config = ConfigDict(extra="forbid")

    time_s: float = Field(..., ge=0)
    kind: Literal["step", "ramp"] = "step"
    dp_w: float = 0.0
    dq_var: float = 0.0
    rate_w_per_s: float = 0.0
    step_period_s: float = Field(1.0, gt=0)
    end_s: Optional[float] = None

    @model_validator(mode="after")
    def _check_ramp(self) -> "ReferenceEvent":
        if self.kind == "ramp" and self.end_s is None:
            raise ValueError("Ramp events need end_s")
        if self.end_s is not None and self.end_s <= self.time_s:
            raise ValueError("end_s must be after time_s")
        return self

    def change_times(self) -> List[float]:
        """Instants at which this event changes the reference."""
        if self.kind == "step":
            return [self.time_s]
        count = int(math.floor((self.end_s - self.time_s) / self.step_period_s + 1e-9))
        return [self.time_s + k * self.step_period_s for k in range(count)]

    def offset_at(self, t: float) -> tuple:
        """(dp, dq) contributed by this event at time t."""
        if self.kind == "step":
            return (self.dp_w, self.dq_var) if t >= self.time_s - 1e-9 else (0.0, 0.0)
        steps = sum(1 for change in self.change_times() if t >= change - 1e-9)
        return steps * self.rate_w_per_s * self.step_period_s, 0.0


class DisturbanceEvent(BaseModel):
    """Extra constant-power load switched on (and optionally off) at a bus."""
    model_config = ConfigDict(extra="forbid")

    time_on_s: float = Field(..., ge=0)
    time_off_s: Optional[float] = None
    bus: str
    p_w: float
    power_factor: float = Field(1.0, gt=0, le=1.0)

    @property
    def q_var(self) -> float:
        return self.p_w * math.tan(math.acos(self.power_factor))

    def active_at(self, t: float) -> bool:
        if t < self.time_on_s - 1e-9:
            return False
        return self.time_off_s is None or t < self.time_off_s - 1e-9


class LoggingConfig(BaseModel):
    """Channel selection for the time-series log."""
    model_config = ConfigDict(extra="forbid")

    buses: Optional[List[str]] = Field(None, description="Buses to log; defaults to all monitored")
    lines: Optional[List[str]] = Field(None, description="Lines to log; defaults to all monitored")
    duals: bool = True


class ScenarioConfig(BaseModel):
    """Complete scenario definition."""
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    description: str = ""
    feeder: str = Field(..., description="Feeder file, relative to the scenario file")
    partition: str = Field(..., description="Partition file, relative to the scenario file")
    plant: Literal["nonlinear", "linear"] = "nonlinear"

    controller: ControllerConfig = Field(default_factory=ControllerConfig)
    areas: Dict[str, Dict[str, Any]] = Field(default_factory=dict, description="Per-area controller overrides")

    sampling_period_s: float = Field(CONTROLLER_DEFAULTS["sampling_period_s"], gt=0)
    dt_s: float = Field(0.01, gt=0)
    duration_s: float = Field(..., gt=0)
    communication_delay_ticks: int = Field(0, ge=0, le=1)

    reference: List[ReferenceEvent] = Field(default_factory=list)
    disturbances: List[DisturbanceEvent] = Field(default_factory=list)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @model_validator(mode="after")
    def _check_timing(self) -> "ScenarioConfig":
        if self.dt_s > self.sampling_period_s:
            raise ValueError("dt_s must not exceed sampling_period_s")
        ratio = self.sampling_period_s / self.dt_s
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError("sampling_period_s must be an integer multiple of dt_s")
        times = [event.time_s for event in self.reference]
        if times != sorted(times):
            raise ValueError("reference events must be time-sorted")
        times = [event.time_on_s for event in self.disturbances]
        if times != sorted(times):
            raise ValueError("disturbances must be time-sorted")
        for area_id in self.areas:
            try:
                self.controller_for(area_id)
            except ValidationError as e:
                raise ValueError(f"areas.{area_id}: {e.errors()[0]['msg']}") from e
        return self

    @property
    def substeps(self) -> int:
        return int(round(self.sampling_period_s / self.dt_s))

    @property
    def tick_count(self) -> int:
        return int(round(self.duration_s / self.sampling_period_s))

    def controller_for(self, area_id: str) -> ControllerConfig:
        """Get the controller configuration of an area (defaults merged with overrides)."""
        override = self.areas.get(area_id)
        if not override:
            return self.controller
        merged = copy.deepcopy(self.controller.model_dump())
        for key, value in override.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key].update(value)
            else:
                merged[key] = value
        return ControllerConfig.model_validate(merged)

    def reference_at(self, t: float) -> tuple:
        """Cumulative (dp, dq) reference offset at time t."""
        dp = dq = 0.0
        for event in self.reference:
            p, q = event.offset_at(t)
            dp += p
            dq += q
        return dp, dq

    def reference_change_times(self) -> List[float]:
        return sorted({t for event in self.reference for t in event.change_times()})
