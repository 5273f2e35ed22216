"""Closed-loop engine: DER dynamics, plant evaluation and sampled controllers."""

import logging
import math
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..controller.state import LcState
from ..exceptions import DivergedPlantError
from ..feeder.measure import MeasurementVector, line_flows
from ..plant.base import Plant, PlantSnapshot
from .log import SimLog
from .setup import ScenarioSetup

logger = logging.getLogger(__name__)

SetPoint = Tuple[float, float]


def der_lag_step(actual: np.ndarray, command: np.ndarray, dt: float, tau: float) -> np.ndarray:
    """Exact first-order update x ← u + (x − u) e^{−dt/τ}."""
    if tau <= 0:
        return np.array(command, dtype=float)
    return command + (actual - command) * math.exp(-dt / tau)


class _Channels:
    """Monitored |V| and |I| channels written to the log."""

    def __init__(self, setup: ScenarioSetup):
        self.setup = setup
        logging_config = setup.scenario.logging
        self.voltage: Dict[Tuple[str, str], Tuple[str, int]] = {}
        self.current: Dict[Tuple[str, str], Tuple[str, int]] = {}
        for area_id in setup.tree.order:
            scope = setup.scopes[area_id]
            for k, node in enumerate(scope.voltage_nodes):
                self.voltage.setdefault(node, (area_id, k))
            for k, channel in enumerate(scope.current_channels):
                self.current.setdefault(channel, (area_id, k))

        model = setup.model
        if logging_config.buses is None:
            self.voltage_nodes = list(self.voltage)
        else:
            self.voltage_nodes = [(bus, ph) for bus in logging_config.buses for ph in model.buses[bus].phases]
        if logging_config.lines is None:
            self.current_channels = list(self.current)
        else:
            self.current_channels = [(line, ph) for line in logging_config.lines for ph in model.lines[line].phases]

    def values(self, snapshot: PlantSnapshot) -> Dict[str, float]:
        model = self.setup.model
        row: Dict[str, float] = {}
        voltages = snapshot.voltages
        for bus, ph in self.voltage_nodes:
            if voltages is not None:
                value = abs(voltages[model.node_index[(bus, ph)]]) / model.buses[bus].base_voltage_v
            elif (bus, ph) in self.voltage:
                area_id, k = self.voltage[(bus, ph)]
                value = snapshot.measurements[area_id].v[k]
            else:
                value = float("nan")
            row[f"v_{bus}_{ph}_pu"] = float(value)

        flows = {}
        for line, ph in self.current_channels:
            if voltages is not None:
                if line not in flows:
                    flows[line] = line_flows(model, voltages, line)
                value = abs(flows[line].current_a[model.lines[line].phases.index(ph)])
            elif (line, ph) in self.current:
                area_id, k = self.current[(line, ph)]
                value = snapshot.measurements[area_id].i[k]
            else:
                value = float("nan")
            row[f"i_{line}_{ph}_a"] = float(value)
        return row


def _violations(setup: ScenarioSetup, area_id: str, measurements: MeasurementVector) -> Tuple[float, float]:
    controller = setup.controllers[area_id]
    config = controller.config
    v_excess = 0.0
    if measurements.v.size:
        v_excess = max(
            0.0,
            float(np.max(measurements.v - config.v_max_pu)),
            float(np.max(config.v_min_pu - measurements.v)),
        )
    i_excess = 0.0
    if measurements.i.size:
        i_excess = max(0.0, float(np.max(measurements.i - controller.i_max)))
    return v_excess, i_excess


def _metadata(setup: ScenarioSetup) -> Dict[str, object]:
    scenario = setup.scenario
    return {
        "scenario": scenario.name,
        "source": str(setup.source) if setup.source else None,
        "plant": scenario.plant,
        "overrides": [[key, value] for key, value in setup.overrides],
        "sampling_period_s": scenario.sampling_period_s,
        "dt_s": scenario.dt_s,
        "duration_s": scenario.duration_s,
        "communication_delay_ticks": scenario.communication_delay_ticks,
        "reference_change_times": scenario.reference_change_times(),
        "disturbances": [event.model_dump() for event in scenario.disturbances],
        "areas": list(setup.tree.order),
        "der_area": setup.der_area,
        "aborted": False,
    }


def run(setup: ScenarioSetup, plant: Optional[Plant] = None) -> SimLog:
    """
    Simulate a scenario in closed loop.

    Every controller tick the plant is evaluated at the current DER outputs
    and active disturbance loads, the controllers step root to leaf, and the
    DER outputs then follow their commands over the substeps of dt.

    Raises:
        DivergedPlantError: the power flow failed; `error.log` holds the rows logged so far
    """
    scenario = setup.scenario
    tree = setup.tree
    plant = plant or setup.create_plant()
    channels = _Channels(setup)
    metadata = _metadata(setup)

    physical = list(tree.physical)
    taus = {der: tree.physical[der].tau_s for der in physical}
    actual = {der: np.zeros(2) for der in physical}
    command = {der: np.zeros(2) for der in physical}
    states: Dict[str, LcState] = {area_id: setup.controllers[area_id].initial_state() for area_id in tree.order}
    delayed: Dict[str, SetPoint] = {area_id: (0.0, 0.0) for area_id in tree.order}

    rows: List[Dict[str, float]] = []
    started = time.perf_counter()
    logger.info(
        f"Running '{scenario.name}': {scenario.tick_count} ticks of {scenario.sampling_period_s} s, "
        f"{scenario.substeps} substeps, plant {plant.name}"
    )

    for tick in range(scenario.tick_count + 1):
        t = tick * scenario.sampling_period_s
        loads = setup.active_loads(t)
        outputs = {der: (float(value[0]), float(value[1])) for der, value in actual.items()}
        try:
            snapshot = plant.evaluate(outputs, loads)
        except DivergedPlantError as e:
            metadata["aborted"] = True
            metadata["abort_time_s"] = t
            metadata["abort_reason"] = str(e)
            e.log = SimLog.from_rows(rows, metadata)
            logger.error(f"Plant diverged at t={t:.3f} s: {e}")
            raise

        offsets: Dict[str, SetPoint] = {}
        for area_id in tree.order:
            parent = tree.parent(area_id)
            if parent is None:
                setpoint = setup.root_setpoint(t)
            else:
                base_p, base_q = setup.baseline_setpoint(area_id)
                source = delayed if scenario.communication_delay_ticks else offsets
                dp, dq = source[area_id]
                setpoint = (base_p + dp, base_q + dq)
            states[area_id], child_offsets = setup.controllers[area_id].step(
                states[area_id], snapshot.measurements[area_id], setpoint
            )
            offsets.update(child_offsets)
            for der, (p, q) in setup.controllers[area_id].der_commands(states[area_id].x).items():
                command[der] = np.array([p, q])
        for area_id, offset in offsets.items():
            delayed[area_id] = offset

        rows.append(_row(setup, t, snapshot, states, offsets, command, actual, channels))

        for _ in range(scenario.substeps):
            for der in physical:
                actual[der] = der_lag_step(actual[der], command[der], scenario.dt_s, taus[der])

    metadata["final_duals"] = {area_id: states[area_id].duals.tolist() for area_id in tree.order}
    metadata["faults"] = {area_id: states[area_id].faults for area_id in tree.order}
    metadata["wall_time_s"] = time.perf_counter() - started
    logger.info(f"Run '{scenario.name}' finished in {metadata['wall_time_s']:.2f} s")
    return SimLog.from_rows(rows, metadata)


def _row(
    setup: ScenarioSetup,
    t: float,
    snapshot: PlantSnapshot,
    states: Dict[str, LcState],
    offsets: Dict[str, SetPoint],
    command: Dict[str, np.ndarray],
    actual: Dict[str, np.ndarray],
    channels: _Channels,
) -> Dict[str, float]:
    tree = setup.tree
    ref_dp, ref_dq = setup.scenario.reference_at(t)
    root = snapshot.measurements[tree.root]
    p0 = float(np.sum(root.p0))
    base_p, base_q = setup.baseline_setpoint(tree.root)
    row = {
        "time_s": t,
        "ref_dp_w": ref_dp,
        "ref_dq_var": ref_dq,
        "dp0_w": p0 - base_p,
        "dq0_var": float(np.sum(root.q0)) - base_q,
        "p0_w": p0,
        "pf_residual_pu": snapshot.residual_pu,
    }
    log_duals = setup.scenario.logging.duals
    for area_id in tree.order:
        state = states[area_id]
        layout = setup.controllers[area_id].layout
        if log_duals:
            row[f"dual_norm_{area_id}"] = state.dual_norm
            row[f"min_dual_{area_id}"] = float(np.min(state.duals)) if state.duals.size else 0.0
            for group in ("lambda", "mu"):
                row[f"{group}_{area_id}"] = float(state.duals[layout.slice(group)].max())
            for group in ("gamma", "nu", "zeta"):
                values = state.duals[layout.slice(group)]
                row[f"{group}_max_{area_id}"] = float(values.max()) if values.size else 0.0
        row[f"faults_{area_id}"] = state.faults
        v_excess, i_excess = _violations(setup, area_id, snapshot.measurements[area_id])
        row[f"viol_v_{area_id}_pu"] = v_excess
        row[f"viol_i_{area_id}_a"] = i_excess
    for der in tree.physical:
        row[f"der_{der}_p_cmd_w"] = float(command[der][0])
        row[f"der_{der}_q_cmd_var"] = float(command[der][1])
        row[f"der_{der}_p_w"] = float(actual[der][0])
        row[f"der_{der}_q_var"] = float(actual[der][1])
    for child, (dp, _) in offsets.items():
        row[f"vder_{child}_p_w"] = dp
    row.update(channels.values(snapshot))
    return row
