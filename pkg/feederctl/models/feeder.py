"""Feeder definition file schema."""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config.defaults import DER_DEFAULTS

Phase = Literal["a", "b", "c"]


class BusConfig(BaseModel):
    """A bus and the phases present at it."""
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    phases: List[Phase] = Field(..., min_length=1)
    base_voltage_v: float = Field(..., gt=0, description="Line-to-neutral base voltage (V)")

    @model_validator(mode="after")
    def _unique_phases(self) -> "BusConfig":
        if len(set(self.phases)) != len(self.phases):
            raise ValueError(f"Bus {self.id} lists a phase twice")
        return self


class ImpedanceMatrixConfig(BaseModel):
    """Full per-phase series impedance matrix (ohm)."""
    model_config = ConfigDict(extra="forbid")

    real: List[List[float]]
    imag: List[List[float]]


class LineConfig(BaseModel):
    """
    Series line between two buses.

    The impedance is either given as self/mutual pairs (r, x) in ohm, applied to
    every phase of the line, or as a full matrix ordered like `phases`.
    """
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    from_bus: str
    to_bus: str
    phases: Optional[List[Phase]] = Field(None, description="Defaults to the phases shared by both buses")
    z_self_ohm: Optional[Tuple[float, float]] = None
    z_mutual_ohm: Tuple[float, float] = (0.0, 0.0)
    z_matrix_ohm: Optional[ImpedanceMatrixConfig] = None
    ampacity_a: float = Field(..., gt=0, description="Thermal limit per phase (A)")

    @model_validator(mode="after")
    def _one_impedance_form(self) -> "LineConfig":
        if (self.z_self_ohm is None) == (self.z_matrix_ohm is None):
            raise ValueError(f"Line {self.id}: give exactly one of z_self_ohm or z_matrix_ohm")
        if self.z_self_ohm is not None and (self.z_self_ohm[0] < 0 or self.z_mutual_ohm[0] < 0):
            raise ValueError(f"Line {self.id}: resistance must be nonnegative")
        if self.z_matrix_ohm is not None and any(
            value < 0 for i, row in enumerate(self.z_matrix_ohm.real) for j, value in enumerate(row) if i == j
        ):
            raise ValueError(f"Line {self.id}: resistance must be nonnegative")
        return self


class LoadConfig(BaseModel):
    """Constant-power wye load on one phase (consumption positive)."""
    model_config = ConfigDict(extra="forbid")

    bus: str
    phase: Phase
    p_w: float
    q_var: float = 0.0


class SlackConfig(BaseModel):
    """Feeder head voltage source."""
    model_config = ConfigDict(extra="forbid")

    bus: str
    voltage_pu: float = Field(1.0, gt=0)
    angles_deg: Tuple[float, float, float] = (0.0, -120.0, 120.0)


class DerConfig(BaseModel):
    """Controllable DER; set-points are split equally over its phases."""
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    bus: str
    phases: Optional[List[Phase]] = None
    tau_s: float = Field(DER_DEFAULTS["tau_s"], gt=0, description="First-order time constant (s)")
    c2: Tuple[float, float] = Field(DER_DEFAULTS["c2"], description="Diagonal of C'' for (p, q)")
    c1: Tuple[float, float] = Field(DER_DEFAULTS["c1"], description="C' for (p, q)")
    lower: Tuple[float, float] = Field(DER_DEFAULTS["lower"], description="Lower bounds (W, var)")
    upper: Tuple[float, float] = Field(DER_DEFAULTS["upper"], description="Upper bounds (W, var)")

    @model_validator(mode="after")
    def _check_cost_and_box(self) -> "DerConfig":
        if min(self.c2) <= 0:
            raise ValueError(f"DER {self.id}: c2 entries must be positive")
        for lo, hi in zip(self.lower, self.upper):
            if not lo <= 0.0 <= hi:
                raise ValueError(f"DER {self.id}: box must contain the origin")
        return self


class FeederConfig(BaseModel):
    """Complete feeder definition."""
    model_config = ConfigDict(extra="forbid")

    name: str = "feeder"
    buses: List[BusConfig] = Field(..., min_length=1)
    lines: List[LineConfig] = Field(default_factory=list)
    loads: List[LoadConfig] = Field(default_factory=list)
    slack: SlackConfig
    ders: List[DerConfig] = Field(default_factory=list)


class SyntheticAreaConfig(BaseModel):
    """One area of a generated feeder."""
    model_config = ConfigDict(extra="forbid")

    id: str
    parent: Optional[str] = None
    attach_position: Optional[int] = Field(
        None, ge=1, description="1-based position of the interface bus in the parent's chain; default: spread"
    )


class SyntheticFeederConfig(BaseModel):
    """Parameters of a generated radial multi-area feeder (file key `generator`)."""
    model_config = ConfigDict(extra="forbid")

    generator: Literal["synthetic_radial"] = "synthetic_radial"
    name: str = "synthetic"
    areas: List[SyntheticAreaConfig] = Field(..., min_length=1)
    buses_per_area: int = Field(10, ge=2)
    ders_per_area: int = Field(4, ge=0)
    base_voltage_v: float = Field(7200.0, gt=0)
    z_self_ohm: Tuple[float, float] = (0.03, 0.06)
    z_mutual_ohm: Tuple[float, float] = (0.01, 0.02)
    ampacity_a: float = Field(600.0, gt=0)
    load_per_bus_w: float = Field(30000.0, ge=0)
    load_power_factor: float = Field(0.9, gt=0, le=1.0)
    der_c2: Tuple[float, float] = (40.0, 40.0)
    der_tau_s: float = Field(DER_DEFAULTS["tau_s"], gt=0)
    seed: Optional[int] = Field(None, description="Randomize impedances and loads by ±50% when set")
