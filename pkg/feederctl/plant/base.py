"""Abstract base class for plants."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..feeder.linearize import OperatingPoint
from ..feeder.measure import AreaScope, MeasurementVector
from ..feeder.network import FeederModel
from ..feeder.power_flow import PowerFlowSolver
from ..hierarchy.tree import ControlAreaTree
from ..stability.global_model import GlobalModel

DerOutputs = Dict[str, Tuple[float, float]]
ExtraLoads = Sequence[Tuple[str, float, float]]


@dataclass(frozen=True, eq=False)
class PlantSnapshot:
    """Measurements of every area after one plant evaluation."""
    measurements: Dict[str, MeasurementVector]
    residual_pu: float = 0.0
    iterations: int = 0
    voltages: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class PlantContext:
    """Everything a plant may need to build itself."""
    model: FeederModel
    tree: ControlAreaTree
    scopes: Dict[str, AreaScope]
    operating_point: OperatingPoint
    global_model: GlobalModel
    solver: PowerFlowSolver
    disturbance_buses: List[str]


class Plant(ABC):
    """Base interface for all plants."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the plant identifier."""
        pass

    @classmethod
    @abstractmethod
    def from_context(cls, context: PlantContext) -> "Plant":
        """Build the plant for a scenario."""
        pass

    @abstractmethod
    def evaluate(self, der_outputs: DerOutputs, extra_loads: ExtraLoads = ()) -> PlantSnapshot:
        """
        Evaluate measurements for the given DER outputs.

        Args:
            der_outputs: Actual (p_w, q_var) deviation per physical DER
            extra_loads: Switched-on disturbance loads (bus, p_w, q_var)
        """
        pass

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name={self.name})"
