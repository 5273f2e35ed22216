"""Physical feeder: topology, power flow, measurements and sensitivities."""

from .network import Bus, DerSite, FeederModel, Line, Load, PHASES
from .admittance import build_admittance, line_admittance
from .power_flow import PowerFlowResult, PowerFlowSolver, solve_power_flow
from .measure import AreaScope, LineFlow, MeasurementVector, line_flows, measure
from .linearize import Injector, OperatingPoint, SensitivityModel, linearize, linearize_many
from .synthetic import synthetic_radial_feeder

__all__ = [
    "Bus",
    "DerSite",
    "FeederModel",
    "Line",
    "Load",
    "PHASES",
    "build_admittance",
    "line_admittance",
    "PowerFlowResult",
    "PowerFlowSolver",
    "solve_power_flow",
    "AreaScope",
    "LineFlow",
    "MeasurementVector",
    "line_flows",
    "measure",
    "Injector",
    "OperatingPoint",
    "SensitivityModel",
    "linearize",
    "linearize_many",
    "synthetic_radial_feeder",
]
