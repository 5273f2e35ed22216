"""Local controller: measurement-driven dual ascent with a regularized primal solve."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.defaults import regularization_coefficients
from ..exceptions import UnsupportedConfigurationError
from ..feeder.linearize import SensitivityModel
from ..feeder.measure import MeasurementVector
from ..hierarchy.der import DerSpec
from ..models.scenario import ControllerConfig
from .constraints import DualLayout, build_cdb
from .state import LcState

logger = logging.getLogger(__name__)

SetPoint = Tuple[float, float]


def dual_update(
    duals: np.ndarray,
    alpha: np.ndarray,
    r_dual: np.ndarray,
    C: np.ndarray,
    D: np.ndarray,
    b: np.ndarray,
    measurements: np.ndarray,
    setpoint: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Projected gradient-ascent step d⁺ = max(0, d + α∘e).

    e = C y + D (p_set, q_set) + b − r∘d is the regularized constraint
    violation, returned alongside d⁺ for the proportional action.
    """
    error = C @ measurements + D @ np.asarray(setpoint, dtype=float) + b - r_dual * duals
    return np.maximum(duals + alpha * error, 0.0), error


def pid_augment(
    duals: np.ndarray,
    kappa_p: np.ndarray,
    kappa_d: np.ndarray,
    error: np.ndarray,
    raw: np.ndarray,
    raw_prev: Optional[np.ndarray],
) -> np.ndarray:
    """d̃ = d⁺ + κ_p e + κ_d (y − y⁻); not projected."""
    if not (len(duals) == len(kappa_p) == len(kappa_d) == len(error) == len(raw)):
        raise ValueError("PID augmentation dimension mismatch")
    if raw_prev is None:
        raw_prev = raw
    elif len(raw_prev) != len(raw):
        raise ValueError("PID augmentation dimension mismatch")
    return duals + kappa_p * error + kappa_d * (raw - raw_prev)


def primal_update(
    linear: np.ndarray,
    c2: np.ndarray,
    c1: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    r_primal: float,
) -> np.ndarray:
    """
    Minimizer of Σ c2 x² + c1 x + (r_p/2)‖x‖² + ℓᵀx over a box, coordinatewise.

    Raises:
        UnsupportedConfigurationError: a coordinate has no curvature
    """
    curvature = 2.0 * np.asarray(c2, dtype=float) + r_primal
    if np.any(curvature <= 0):
        raise UnsupportedConfigurationError("Primal step needs positive curvature in every coordinate")
    return np.clip((-np.asarray(c1) - linear) / curvature, lower, upper)


def lpf_vder(memory: np.ndarray, values: np.ndarray, coefficient: float) -> np.ndarray:
    """First-order filter x_f ← x_f + β (x − x_f) with β = T_s / (T_f + T_s)."""
    return memory + coefficient * (values - memory)


class LocalController:
    """
    Compiled controller of one area.

    Holds the static data (constraint structure, local sensitivities, costs,
    boxes, gains) and steps an immutable LcState.
    """

    def __init__(
        self,
        area_id: str,
        config: ControllerConfig,
        specs: Sequence[DerSpec],
        sensitivity: SensitivityModel,
        layout: DualLayout,
        v_scale: np.ndarray,
        i_max: np.ndarray,
        sampling_period_s: float,
        children: Sequence[str] = (),
    ):
        self.area_id = area_id
        self.config = config
        self.specs = list(specs)
        self.channels = [spec.id for spec in self.specs]
        self.sensitivity = sensitivity
        self.layout = layout
        self.children = list(children)
        self.sampling_period_s = sampling_period_s

        self.C, self.D, self.b = build_cdb(
            layout,
            config.tracking,
            config.e_p_w,
            config.e_q_var,
            config.v_max_pu,
            config.v_min_pu,
            i_max,
            v_scale,
        )
        self.v_scale = np.asarray(v_scale, dtype=float)
        self.i_max = np.asarray(i_max, dtype=float)
        self.CK = self.C @ sensitivity.K if sensitivity.n_columns else np.zeros((layout.size, 0))

        gains = config.gains
        coefficients = regularization_coefficients(gains, config.reg_coefficients)
        self.alpha = config.alpha * layout.expand(gains)
        self.r_dual = config.r_dual * layout.expand(coefficients)
        self.kappa_p = layout.expand(config.kappa_p)
        self.kappa_d = layout.expand(config.kappa_d)

        self.c2 = np.array([c for spec in self.specs for c in spec.cost.c2], dtype=float)
        self.c1 = np.array([c for spec in self.specs for c in spec.cost.c1], dtype=float)
        self.lower = np.array([v for spec in self.specs for v in spec.box.lower], dtype=float)
        self.upper = np.array([v for spec in self.specs for v in spec.box.upper], dtype=float)
        self.r_primal = config.r_primal
        self.vder_mask = np.array([spec.is_virtual for spec in self.specs for _ in range(2)], dtype=bool)
        if config.pid_target == "vder":
            self.pid_mask = self.vder_mask
        else:
            self.pid_mask = np.ones(len(self.vder_mask), dtype=bool)
        self.lpf_coefficient = sampling_period_s / (config.lpf_time_constant_s + sampling_period_s)
        self.pid_enabled = bool(np.any(self.kappa_p) or np.any(self.kappa_d))

        self._child_positions: Dict[str, int] = {}
        for spec_index, spec in enumerate(self.specs):
            if spec.is_virtual:
                self._child_positions[spec.child_area] = spec_index

    @property
    def n_x(self) -> int:
        return 2 * len(self.specs)

    def initial_state(self) -> LcState:
        return LcState.initial(self.layout.size, self.n_x)

    def strong_convexity(self) -> float:
        return min((spec.cost.strong_convexity for spec in self.specs), default=float("inf"))

    def child_offset(self, state_lpf: np.ndarray, child: str) -> SetPoint:
        """Filtered VDER set-point (Δp, Δq) transmitted to a child area."""
        k = self._child_positions[child]
        return float(state_lpf[2 * k]), float(state_lpf[2 * k + 1])

    def der_commands(self, x: np.ndarray) -> Dict[str, SetPoint]:
        return {
            spec.id: (float(x[2 * k]), float(x[2 * k + 1]))
            for k, spec in enumerate(self.specs)
            if not spec.is_virtual
        }

    def step(
        self,
        state: LcState,
        measurements: MeasurementVector,
        setpoint: SetPoint,
    ) -> Tuple[LcState, Dict[str, SetPoint]]:
        return lc_step(self, state, measurements, setpoint)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(area={self.area_id}, channels={self.channels})"


def lc_step(
    controller: LocalController,
    state: LcState,
    measurements: MeasurementVector,
    setpoint: SetPoint,
) -> Tuple[LcState, Dict[str, SetPoint]]:
    """
    One sampling tick of a local controller.

    Receives the parent set-point, updates the duals from measurements,
    applies the optional PID augmentation, solves the primal step, filters
    the VDER coordinates and emits child set-point offsets.

    Returns:
        (new state, {child area: (Δp, Δq) offset})
    """
    y = measurements.stack()
    if not np.all(np.isfinite(y)):
        logger.warning(f"Area {controller.area_id}: non-finite measurements at tick {state.tick}, holding duals")
        held = state.evolve(faults=state.faults + 1, tick=state.tick + 1)
        return held, {child: controller.child_offset(state.lpf, child) for child in controller.children}

    duals, error = dual_update(
        state.duals,
        controller.alpha,
        controller.r_dual,
        controller.C,
        controller.D,
        controller.b,
        y,
        setpoint,
    )

    raw = controller.C @ y
    if controller.pid_enabled:
        augmented = pid_augment(duals, controller.kappa_p, controller.kappa_d, error, raw, state.y_prev)
        linear = np.where(controller.pid_mask, controller.CK.T @ augmented, controller.CK.T @ duals)
    else:
        linear = controller.CK.T @ duals

    x = primal_update(linear, controller.c2, controller.c1, controller.lower, controller.upper, controller.r_primal)

    lpf = np.where(controller.vder_mask, lpf_vder(state.lpf, x, controller.lpf_coefficient), x)

    new_state = LcState(duals=duals, x=x, y_prev=raw, lpf=lpf, faults=state.faults, tick=state.tick + 1)
    return new_state, {child: controller.child_offset(lpf, child) for child in controller.children}
