"""Linear plant: the feeder-wide sensitivity model evaluated around the operating point."""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..feeder.linearize import Injector, linearize_many
from ..feeder.measure import MeasurementVector
from ..hierarchy.tree import ControlAreaTree
from ..stability.global_model import GlobalModel
from .base import DerOutputs, ExtraLoads, Plant, PlantContext, PlantSnapshot

logger = logging.getLogger(__name__)


class LinearPlant(Plant):
    """
    y_i = k_i + Σ_j K_ij x_j + Σ_loads S_i,bus (p, q).

    Only physical DER columns carry a response; disturbance loads enter
    through their own load sensitivities.
    """

    def __init__(
        self,
        global_model: GlobalModel,
        tree: ControlAreaTree,
        load_sensitivities: Dict[str, Dict[str, np.ndarray]],
    ):
        self.global_model = global_model.with_vder_model("physical")
        self.tree = tree
        self.load_sensitivities = load_sensitivities
        self._positions: Dict[str, List[Tuple[str, int]]] = {}
        for area_id in tree.order:
            for k, channel in enumerate(tree.stacked_channels(area_id)):
                self._positions.setdefault(channel, []).append((area_id, k))

    @property
    def name(self) -> str:
        return "linear"

    @classmethod
    def from_context(cls, context: PlantContext) -> "LinearPlant":
        order = list(context.tree.order)
        load_sensitivities: Dict[str, Dict[str, np.ndarray]] = {}
        buses = sorted(set(context.disturbance_buses))
        if buses:
            injectors = [
                Injector(f"load_{bus}", bus, context.model.buses[bus].phases, -1.0) for bus in buses
            ]
            models = linearize_many(
                context.model,
                context.operating_point,
                injectors,
                [context.scopes[area_id] for area_id in order],
                solver=context.solver,
            )
            for k, bus in enumerate(buses):
                load_sensitivities[bus] = {area_id: models[area_id].K[:, 2 * k : 2 * k + 2] for area_id in order}
        return cls(context.global_model, context.tree, load_sensitivities)

    def _stacked_decisions(self, der_outputs: DerOutputs) -> Dict[str, np.ndarray]:
        x = {area_id: np.zeros(2 * len(self.tree.stacked_channels(area_id))) for area_id in self.tree.order}
        for der_id, (p, q) in der_outputs.items():
            for area_id, k in self._positions.get(der_id, ()):
                x[area_id][2 * k] = p
                x[area_id][2 * k + 1] = q
        return x

    def evaluate(self, der_outputs: DerOutputs, extra_loads: ExtraLoads = ()) -> PlantSnapshot:
        x = self._stacked_decisions(der_outputs)
        measurements = {}
        for i in self.tree.order:
            y = self.global_model.offsets[i].copy()
            for j in self.tree.order:
                if x[j].size:
                    y += self.global_model.block(i, j) @ x[j]
            for bus, p, q in extra_loads:
                y += self.load_sensitivities[bus][i] @ np.array([p, q])
            scope = self.global_model.scopes[i]
            measurements[i] = MeasurementVector.from_stack(y, scope.n_phases, scope.n_v)
        return PlantSnapshot(measurements=measurements)

    def offsets_with_loads(self, extra_loads: ExtraLoads) -> Dict[str, np.ndarray]:
        """Measurement offsets k_i with the given disturbance loads switched on."""
        offsets = {}
        for i in self.tree.order:
            y = self.global_model.offsets[i].copy()
            for bus, p, q in extra_loads:
                y += self.load_sensitivities[bus][i] @ np.array([p, q])
            offsets[i] = y
        return offsets
