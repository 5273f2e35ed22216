"""Finite-difference sensitivity models around a solved operating point."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import get_settings
from ..exceptions import DivergedPlantError, LinearizationError
from .measure import AreaScope, MeasurementVector, measure
from .network import FeederModel
from .power_flow import PowerFlowSolver

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Injector:
    """
    A controllable injection channel pair (p, q) at a bus.

    sign = +1 injects (physical DER); sign = −1 models an import at the bus
    (virtual DER standing for a child area).
    """
    id: str
    bus: str
    phases: Tuple[str, ...]
    sign: float = 1.0


@dataclass(frozen=True, eq=False)
class OperatingPoint:
    injections: np.ndarray
    voltages: np.ndarray


@dataclass(frozen=True, eq=False)
class SensitivityModel:
    """
    Linear measurement model y ≈ K x + offsets.

    Columns are ordered (p_1, q_1, p_2, q_2, ...) over the injectors. A is in
    pu per W/var, B in A per W/var, M and H are dimensionless.
    """
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    H: np.ndarray
    a: np.ndarray
    b: np.ndarray
    m: np.ndarray
    h: np.ndarray
    injector_ids: Tuple[str, ...] = ()

    @property
    def n_columns(self) -> int:
        return self.M.shape[1]

    @property
    def K(self) -> np.ndarray:
        """col(M, H, A, B)."""
        return np.vstack([self.M, self.H, self.A, self.B])

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([self.m, self.h, self.a, self.b])

    def predict(self, x: np.ndarray) -> MeasurementVector:
        """Predicted measurements for set-point deviations x."""
        x = np.asarray(x, dtype=float)
        return MeasurementVector(
            p0=self.m + self.M @ x,
            q0=self.h + self.H @ x,
            v=self.a + self.A @ x,
            i=self.b + self.B @ x,
        )

    @classmethod
    def from_stacked(
        cls,
        K: np.ndarray,
        offsets: np.ndarray,
        n_phases: int,
        n_v: int,
        injector_ids: Sequence[str] = (),
    ) -> "SensitivityModel":
        rows = [0, n_phases, 2 * n_phases, 2 * n_phases + n_v, K.shape[0]]
        parts = [K[rows[k] : rows[k + 1]] for k in range(4)]
        offs = [offsets[rows[k] : rows[k + 1]] for k in range(4)]
        return cls(
            A=parts[2],
            B=parts[3],
            M=parts[0],
            H=parts[1],
            a=offs[2],
            b=offs[3],
            m=offs[0],
            h=offs[1],
            injector_ids=tuple(injector_ids),
        )


def _channel_injection(model: FeederModel, injector: Injector, value: complex) -> np.ndarray:
    delta = np.zeros(len(model.nodes), dtype=complex)
    for ph in injector.phases:
        delta[model.node_index[(injector.bus, ph)]] += injector.sign * value / len(injector.phases)
    return delta


def linearize_many(
    model: FeederModel,
    operating_point: OperatingPoint,
    injectors: Sequence[Injector],
    scopes: Sequence[AreaScope],
    epsilon: Optional[float] = None,
    solver: Optional[PowerFlowSolver] = None,
) -> Dict[str, SensitivityModel]:
    """
    Linearize several measurement scopes with respect to a shared injector list.

    Each channel is perturbed by ±epsilon (W or var) and the measurement change
    is taken by central differences.

    Raises:
        LinearizationError: power flow diverged for a perturbed injection
    """
    epsilon = epsilon if epsilon is not None else get_settings().linearization_epsilon
    if epsilon <= 0:
        raise LinearizationError("epsilon must be positive")
    solver = solver or PowerFlowSolver(model)

    base = {scope.area_id: measure(model, operating_point.voltages, scope).stack() for scope in scopes}
    columns: Dict[str, List[np.ndarray]] = {scope.area_id: [] for scope in scopes}

    for injector in injectors:
        for unit in (1.0, 1j):
            delta = _channel_injection(model, injector, epsilon * unit)
            stacks = []
            for direction in (1.0, -1.0):
                try:
                    result = solver.solve(operating_point.injections + direction * delta, operating_point.voltages)
                except DivergedPlantError as e:
                    raise LinearizationError(f"Power flow diverged perturbing {injector.id}: {e}") from e
                stacks.append({scope.area_id: measure(model, result.voltages, scope).stack() for scope in scopes})
            for scope in scopes:
                column = (stacks[0][scope.area_id] - stacks[1][scope.area_id]) / (2.0 * epsilon)
                if not np.all(np.isfinite(column)):
                    raise LinearizationError(f"Non-finite sensitivity for {injector.id} in area {scope.area_id}")
                columns[scope.area_id].append(column)

    models = {}
    ids = tuple(injector.id for injector in injectors)
    for scope in scopes:
        n_rows = len(base[scope.area_id])
        K = np.column_stack(columns[scope.area_id]) if columns[scope.area_id] else np.zeros((n_rows, 0))
        models[scope.area_id] = SensitivityModel.from_stacked(K, base[scope.area_id], scope.n_phases, scope.n_v, ids)
    logger.info(f"Linearized {len(scopes)} scope(s) over {len(injectors)} injector(s), epsilon={epsilon:g}")
    return models


def linearize(
    model: FeederModel,
    operating_point: OperatingPoint,
    injectors: Sequence[Injector],
    scope: AreaScope,
    epsilon: Optional[float] = None,
    solver: Optional[PowerFlowSolver] = None,
) -> SensitivityModel:
    """Linearize one area's measurements with respect to the given injectors."""
    return linearize_many(model, operating_point, injectors, [scope], epsilon, solver)[scope.area_id]
