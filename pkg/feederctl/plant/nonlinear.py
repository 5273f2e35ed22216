"""Nonlinear plant: full power flow at every evaluation."""

import logging
from typing import Dict

import numpy as np

from ..feeder.measure import AreaScope, measure
from ..feeder.network import FeederModel
from ..feeder.power_flow import PowerFlowSolver
from .base import DerOutputs, ExtraLoads, Plant, PlantContext, PlantSnapshot

logger = logging.getLogger(__name__)


class NonlinearPlant(Plant):
    """Solves the power flow with DER deviations added to the baseline injections."""

    def __init__(
        self,
        model: FeederModel,
        scopes: Dict[str, AreaScope],
        solver: PowerFlowSolver,
        baseline: np.ndarray,
    ):
        self.model = model
        self.scopes = scopes
        self.solver = solver
        self.baseline = baseline
        self._last_voltages = None

    @property
    def name(self) -> str:
        return "nonlinear"

    @classmethod
    def from_context(cls, context: PlantContext) -> "NonlinearPlant":
        return cls(context.model, context.scopes, context.solver, context.operating_point.injections)

    def evaluate(self, der_outputs: DerOutputs, extra_loads: ExtraLoads = ()) -> PlantSnapshot:
        injections = self.baseline + self.model.der_injections(der_outputs)
        if extra_loads:
            injections = injections + self.model.extra_load_injections(extra_loads)
        result = self.solver.solve(injections, self._last_voltages)
        self._last_voltages = result.voltages
        measurements = {area_id: measure(self.model, result.voltages, scope) for area_id, scope in self.scopes.items()}
        return PlantSnapshot(
            measurements=measurements,
            residual_pu=result.residual_pu,
            iterations=result.iterations,
            voltages=result.voltages,
        )
