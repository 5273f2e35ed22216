"""Z-bus fixed-point power flow for radial multiphase feeders."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..config import get_settings
from ..exceptions import DivergedPlantError
from .admittance import build_admittance
from .network import FeederModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PowerFlowResult:
    """Converged solution; `voltages` covers every node (V)."""
    voltages: np.ndarray
    iterations: int
    residual_pu: float
    slack_power: np.ndarray  # VA injected by the source per slack node

    @property
    def head_power(self) -> complex:
        return complex(np.sum(self.slack_power))


class PowerFlowSolver:
    """
    Fixed-point iteration V_L ← w + Z_LL · conj(S_L / V_L).

    Z_LL = Y_LL⁻¹ is applied through an LU factorization computed once per
    feeder, and w = −Z_LL · Y_L0 · V_0 is the no-load voltage profile.
    """

    def __init__(
        self,
        model: FeederModel,
        tolerance_pu: Optional[float] = None,
        max_iterations: Optional[int] = None,
        max_residual_pu: Optional[float] = None,
    ):
        settings = get_settings()
        self.model = model
        self.tolerance_pu = tolerance_pu if tolerance_pu is not None else settings.power_flow_tolerance_pu
        self.max_iterations = max_iterations if max_iterations is not None else settings.power_flow_max_iterations
        self.max_residual_pu = max_residual_pu if max_residual_pu is not None else settings.power_flow_max_residual_pu
        self.power_base_va = settings.power_base_va

        self.y_bus = build_admittance(model)
        self.slack = np.array(model.slack_nodes)
        self.load = np.array(model.load_nodes)
        self.v0 = model.slack_voltages()
        self.v_base = model.base_voltages()

        y_ll = self.y_bus[np.ix_(self.load, self.load)]
        y_l0 = self.y_bus[np.ix_(self.load, self.slack)]
        self._lu = scipy.linalg.lu_factor(y_ll)
        self.w = -scipy.linalg.lu_solve(self._lu, y_l0 @ self.v0)

    def solve(self, injections: np.ndarray, initial: Optional[np.ndarray] = None) -> PowerFlowResult:
        """
        Solve for node voltages.

        Args:
            injections: Complex power injected per node (VA); slack entries are ignored
            initial: Optional warm-start voltages for every node

        Returns:
            PowerFlowResult

        Raises:
            DivergedPlantError: no convergence within max_iterations, or a nodal
                power mismatch above max_residual_pu at the converged point
        """
        s_load = np.asarray(injections, dtype=complex)[self.load]
        v_l = self.w.copy() if initial is None else np.asarray(initial, dtype=complex)[self.load].copy()
        base = self.v_base[self.load]

        change = np.inf
        for iteration in range(1, self.max_iterations + 1):
            v_new = self.w + scipy.linalg.lu_solve(self._lu, np.conj(s_load / v_l))
            if not np.all(np.isfinite(v_new)):
                raise DivergedPlantError("Power flow produced non-finite voltages", iteration)
            change = float(np.max(np.abs(v_new - v_l) / base)) if len(base) else 0.0
            v_l = v_new
            if change < self.tolerance_pu:
                break
        else:
            raise DivergedPlantError(
                f"Power flow did not converge in {self.max_iterations} iterations (last change {change:.3e} pu)",
                self.max_iterations,
                change,
            )

        voltages = np.zeros(len(self.model.nodes), dtype=complex)
        voltages[self.slack] = self.v0
        voltages[self.load] = v_l

        computed = voltages * np.conj(self.y_bus @ voltages)
        residual = float(np.max(np.abs(computed[self.load] - s_load)) / self.power_base_va) if len(self.load) else 0.0
        if residual > self.max_residual_pu:
            raise DivergedPlantError(
                f"Power flow stopped with nodal mismatch {residual:.3e} pu (limit {self.max_residual_pu:.1e} pu)",
                iteration,
                residual,
            )
        logger.debug(f"Power flow converged in {iteration} iterations, residual {residual:.2e} pu")
        return PowerFlowResult(
            voltages=voltages,
            iterations=iteration,
            residual_pu=residual,
            slack_power=computed[self.slack],
        )


def solve_power_flow(
    model: FeederModel,
    injections: np.ndarray,
    initial: Optional[np.ndarray] = None,
) -> PowerFlowResult:
    """One-shot power flow (builds a solver for the model)."""
    return PowerFlowSolver(model).solve(injections, initial)
