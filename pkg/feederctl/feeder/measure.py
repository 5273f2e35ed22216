"""Grid measurements seen by a control area."""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from .admittance import line_admittance, line_node_indices
from .network import FeederModel, Node


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    """
    Measurements of one area.

    p0/q0 are per interface phase (W, var), importing into the area;
    v is in per-unit, i in amps.
    """
    p0: np.ndarray
    q0: np.ndarray
    v: np.ndarray
    i: np.ndarray

    def stack(self) -> np.ndarray:
        """col(p0, q0, v, i)."""
        return np.concatenate([self.p0, self.q0, self.v, self.i])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.stack())))

    @classmethod
    def from_stack(cls, values: np.ndarray, n_phases: int, n_v: int) -> "MeasurementVector":
        values = np.asarray(values, dtype=float)
        return cls(
            p0=values[:n_phases],
            q0=values[n_phases : 2 * n_phases],
            v=values[2 * n_phases : 2 * n_phases + n_v],
            i=values[2 * n_phases + n_v :],
        )


@dataclass(frozen=True, eq=False)
class LineFlow:
    current_a: np.ndarray  # from-bus towards to-bus, per line phase
    s_from_va: np.ndarray
    s_to_va: np.ndarray

    @property
    def losses_va(self) -> complex:
        return complex(np.sum(self.s_from_va + self.s_to_va))


@dataclass(frozen=True)
class AreaScope:
    """
    Measurement sets of one area.

    interface_lines holds (line id, True if the interface bus is the line's from-bus).
    """
    area_id: str
    interface_bus: str
    interface_phases: Tuple[str, ...]
    interface_lines: Tuple[Tuple[str, bool], ...]
    voltage_nodes: Tuple[Node, ...]
    current_channels: Tuple[Tuple[str, str], ...]  # (line id, phase)

    @property
    def n_phases(self) -> int:
        return len(self.interface_phases)

    @property
    def n_v(self) -> int:
        return len(self.voltage_nodes)

    @property
    def n_i(self) -> int:
        return len(self.current_channels)

    @classmethod
    def build(
        cls,
        model: FeederModel,
        area_id: str,
        interface_bus: str,
        downstream_buses: Iterable[str],
        monitored_buses: Sequence[str],
        monitored_lines: Sequence[str],
    ) -> "AreaScope":
        """
        Resolve an area's measurement sets against the feeder.

        Args:
            downstream_buses: Buses whose supply passes the interface (the area and its descendants)
        """
        if interface_bus not in model.buses:
            raise ConfigurationError(f"Area {area_id}: unknown interface bus {interface_bus}")
        downstream = set(downstream_buses) - {interface_bus}
        interface_lines = []
        for line in model.lines.values():
            if line.from_bus == interface_bus and line.to_bus in downstream:
                interface_lines.append((line.id, True))
            elif line.to_bus == interface_bus and line.from_bus in downstream:
                interface_lines.append((line.id, False))
        if not interface_lines:
            raise ConfigurationError(f"Area {area_id}: no line leaves interface bus {interface_bus} into the area")

        voltage_nodes = []
        for bus in monitored_buses:
            if bus not in model.buses:
                raise ConfigurationError(f"Area {area_id}: monitored bus {bus} not in feeder")
            voltage_nodes.extend((bus, ph) for ph in model.buses[bus].phases)

        current_channels = []
        for line_id in monitored_lines:
            if line_id not in model.lines:
                raise ConfigurationError(f"Area {area_id}: monitored line {line_id} not in feeder")
            current_channels.extend((line_id, ph) for ph in model.lines[line_id].phases)

        return cls(
            area_id=area_id,
            interface_bus=interface_bus,
            interface_phases=model.buses[interface_bus].phases,
            interface_lines=tuple(interface_lines),
            voltage_nodes=tuple(voltage_nodes),
            current_channels=tuple(current_channels),
        )

    def current_limits(self, model: FeederModel, override: Optional[object] = None) -> np.ndarray:
        """Per-channel current limit (A): uniform value, per-line dict or line ampacity."""
        limits = []
        for line_id, _ in self.current_channels:
            if isinstance(override, dict) and line_id in override:
                limits.append(float(override[line_id]))
            elif isinstance(override, (int, float)):
                limits.append(float(override))
            else:
                limits.append(model.lines[line_id].ampacity_a)
        return np.array(limits)

    def voltage_bases(self, model: FeederModel) -> np.ndarray:
        return np.array([model.buses[bus].base_voltage_v for bus, _ in self.voltage_nodes])


def line_flows(model: FeederModel, voltages: np.ndarray, line_id: str) -> LineFlow:
    """Current and complex power at both ends of a series line."""
    line = model.lines[line_id]
    f, t = line_node_indices(model, line)
    v_from = voltages[f]
    v_to = voltages[t]
    current = line_admittance(line) @ (v_from - v_to)
    return LineFlow(
        current_a=current,
        s_from_va=v_from * np.conj(current),
        s_to_va=-v_to * np.conj(current),
    )


def measure(model: FeederModel, voltages: np.ndarray, scope: AreaScope) -> MeasurementVector:
    """Extract an area's measurement vector from solved voltages."""
    phase_pos = {ph: k for k, ph in enumerate(scope.interface_phases)}
    s0 = np.zeros(scope.n_phases, dtype=complex)
    for line_id, outgoing in scope.interface_lines:
        flow = line_flows(model, voltages, line_id)
        s_in = flow.s_from_va if outgoing else flow.s_to_va
        for k, ph in enumerate(model.lines[line_id].phases):
            s0[phase_pos[ph]] += s_in[k]

    v = np.array([abs(voltages[model.node_index[node]]) for node in scope.voltage_nodes])
    v = v / scope.voltage_bases(model) if len(v) else np.zeros(0)

    flows = {}
    i = np.zeros(scope.n_i)
    for k, (line_id, ph) in enumerate(scope.current_channels):
        if line_id not in flows:
            flows[line_id] = line_flows(model, voltages, line_id)
        i[k] = abs(flows[line_id].current_a[model.lines[line_id].phases.index(ph)])

    return MeasurementVector(p0=s0.real.copy(), q0=s0.imag.copy(), v=v, i=i)
