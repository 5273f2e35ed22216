"""Multiphase radial feeder model over (bus, phase) nodes."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..exceptions import ConfigurationError
from ..models.feeder import FeederConfig, LineConfig

logger = logging.getLogger(__name__)

PHASES = ("a", "b", "c")

Node = Tuple[str, str]


@dataclass(frozen=True)
class Bus:
    id: str
    phases: Tuple[str, ...]
    base_voltage_v: float


@dataclass(frozen=True)
class Line:
    """Series branch; `z` is ordered like `phases`."""
    id: str
    from_bus: str
    to_bus: str
    phases: Tuple[str, ...]
    z: np.ndarray = field(repr=False, compare=False)
    ampacity_a: float


@dataclass(frozen=True)
class Load:
    bus: str
    phase: str
    s_va: complex


@dataclass(frozen=True)
class DerSite:
    id: str
    bus: str
    phases: Tuple[str, ...]


def _line_impedance(config: LineConfig, phases: Sequence[str]) -> np.ndarray:
    n = len(phases)
    if config.z_matrix_ohm is not None:
        real = np.asarray(config.z_matrix_ohm.real, dtype=float)
        imag = np.asarray(config.z_matrix_ohm.imag, dtype=float)
        if real.shape != (n, n) or imag.shape != (n, n):
            raise ConfigurationError(f"Line {config.id}: impedance matrix must be {n}x{n}")
        return real + 1j * imag
    z_self = complex(*config.z_self_ohm)
    z_mutual = complex(*config.z_mutual_ohm)
    return np.full((n, n), z_mutual, dtype=complex) + np.eye(n) * (z_self - z_mutual)


class FeederModel:
    """
    Immutable feeder description.

    Nodes are (bus, phase) pairs in bus order, phases in a-b-c order. Power
    injections follow the generation convention (loads enter negative).
    """

    def __init__(
        self,
        buses: Iterable[Bus],
        lines: Iterable[Line],
        loads: Iterable[Load],
        slack_bus: str,
        slack_voltage_pu: float = 1.0,
        slack_angles_deg: Sequence[float] = (0.0, -120.0, 120.0),
        ders: Iterable[DerSite] = (),
        name: str = "feeder",
        validate: bool = True,
    ):
        self.name = name
        self.buses: Dict[str, Bus] = {bus.id: bus for bus in buses}
        self.lines: Dict[str, Line] = {line.id: line for line in lines}
        self.loads: Tuple[Load, ...] = tuple(loads)
        self.ders: Dict[str, DerSite] = {der.id: der for der in ders}
        self.slack_bus = slack_bus
        self.slack_voltage_pu = slack_voltage_pu
        self.slack_angles_deg = tuple(slack_angles_deg)

        self.nodes: List[Node] = [(bus.id, ph) for bus in self.buses.values() for ph in bus.phases]
        self.node_index: Dict[Node, int] = {node: k for k, node in enumerate(self.nodes)}

        self.graph = nx.MultiGraph()
        self.graph.add_nodes_from(self.buses)
        for line in self.lines.values():
            self.graph.add_edge(line.from_bus, line.to_bus, key=line.id)

        if validate:
            self.validate()

    @classmethod
    def from_config(cls, config: FeederConfig) -> "FeederModel":
        """Build a validated model from a feeder file."""
        buses = [Bus(b.id, tuple(ph for ph in PHASES if ph in b.phases), b.base_voltage_v) for b in config.buses]
        bus_phases = {bus.id: bus.phases for bus in buses}

        lines = []
        for line in config.lines:
            for end in (line.from_bus, line.to_bus):
                if end not in bus_phases:
                    raise ConfigurationError(f"Line {line.id}: unknown bus {end}")
            if line.phases is not None:
                phases = tuple(ph for ph in PHASES if ph in line.phases)
            else:
                phases = tuple(ph for ph in bus_phases[line.from_bus] if ph in bus_phases[line.to_bus])
            lines.append(Line(line.id, line.from_bus, line.to_bus, phases, _line_impedance(line, phases), line.ampacity_a))

        loads = [Load(load.bus, load.phase, complex(load.p_w, load.q_var)) for load in config.loads]

        ders = []
        for der in config.ders:
            if der.bus not in bus_phases:
                raise ConfigurationError(f"DER {der.id}: unknown bus {der.bus}")
            phases = tuple(ph for ph in PHASES if ph in (der.phases or bus_phases[der.bus]))
            ders.append(DerSite(der.id, der.bus, phases))

        model = cls(
            buses,
            lines,
            loads,
            config.slack.bus,
            config.slack.voltage_pu,
            config.slack.angles_deg,
            ders,
            name=config.name,
        )
        logger.info(
            f"Feeder '{model.name}': {len(model.buses)} buses, {len(model.lines)} lines, "
            f"{len(model.nodes)} nodes, {len(model.ders)} DERs"
        )
        return model

    def validate(self) -> None:
        """Check references, phases and radial connectivity."""
        if self.slack_bus not in self.buses:
            raise ConfigurationError(f"Unknown slack bus {self.slack_bus}")

        for line in self.lines.values():
            for end in (line.from_bus, line.to_bus):
                if end not in self.buses:
                    raise ConfigurationError(f"Line {line.id}: unknown bus {end}")
                missing = set(line.phases) - set(self.buses[end].phases)
                if missing:
                    raise ConfigurationError(f"Line {line.id}: phases {sorted(missing)} missing at bus {end}")
            if not line.phases:
                raise ConfigurationError(f"Line {line.id}: no phases")
            if np.any(np.real(np.diag(line.z)) < 0):
                raise ConfigurationError(f"Line {line.id}: negative resistance")
            if line.ampacity_a <= 0:
                raise ConfigurationError(f"Line {line.id}: ampacity must be positive")

        for load in self.loads:
            if (load.bus, load.phase) not in self.node_index:
                raise ConfigurationError(f"Load at {load.bus}.{load.phase}: phase not present at bus")
        for der in self.ders.values():
            for ph in der.phases:
                if (der.bus, ph) not in self.node_index:
                    raise ConfigurationError(f"DER {der.id}: phase {ph} not present at bus {der.bus}")

        self.check_topology()

        used = {ph for bus in self.buses.values() for ph in bus.phases}
        missing = used - set(self.buses[self.slack_bus].phases)
        if missing:
            raise ConfigurationError(f"Slack bus {self.slack_bus} lacks phases {sorted(missing)}")

    def check_topology(self) -> None:
        """Reject duplicate branches, disconnected buses and meshes."""
        seen = {}
        for line in self.lines.values():
            pair = frozenset((line.from_bus, line.to_bus))
            if len(pair) == 1:
                raise ConfigurationError(f"Line {line.id}: both ends at bus {line.from_bus}")
            for ph in line.phases:
                if (pair, ph) in seen:
                    raise ConfigurationError(
                        f"Duplicate line between {line.from_bus} and {line.to_bus} on phase {ph}: "
                        f"{seen[(pair, ph)]} and {line.id}"
                    )
                seen[(pair, ph)] = line.id

        if not nx.is_connected(self.graph):
            isolated = [bus for bus in self.buses if not nx.has_path(self.graph, self.slack_bus, bus)]
            raise ConfigurationError(f"Feeder is not connected; unreachable buses: {isolated}")
        simple = nx.Graph(self.graph)
        if not nx.is_tree(simple):
            raise ConfigurationError("Feeder must be radial")

    # Node bookkeeping

    def bus_nodes(self, bus: str) -> List[int]:
        return [self.node_index[(bus, ph)] for ph in self.buses[bus].phases]

    @property
    def slack_nodes(self) -> List[int]:
        return self.bus_nodes(self.slack_bus)

    @property
    def load_nodes(self) -> List[int]:
        slack = set(self.slack_nodes)
        return [k for k in range(len(self.nodes)) if k not in slack]

    def base_voltages(self) -> np.ndarray:
        """Line-to-neutral base voltage (V) per node."""
        return np.array([self.buses[bus].base_voltage_v for bus, _ in self.nodes])

    def slack_voltages(self) -> np.ndarray:
        """Complex slack voltages (V) per slack node."""
        bus = self.buses[self.slack_bus]
        values = []
        for ph in bus.phases:
            angle = math.radians(self.slack_angles_deg[PHASES.index(ph)])
            values.append(self.slack_voltage_pu * bus.base_voltage_v * complex(math.cos(angle), math.sin(angle)))
        return np.array(values)

    def flat_start(self) -> np.ndarray:
        """Initial voltages: slack magnitude and phase angles everywhere."""
        voltages = np.zeros(len(self.nodes), dtype=complex)
        for k, (bus, ph) in enumerate(self.nodes):
            angle = math.radians(self.slack_angles_deg[PHASES.index(ph)])
            voltages[k] = self.slack_voltage_pu * self.buses[bus].base_voltage_v * complex(math.cos(angle), math.sin(angle))
        return voltages

    # Injections

    def load_injections(self, extra_loads: Optional[Sequence[Tuple[str, float, float]]] = None) -> np.ndarray:
        """
        Per-node complex injection (VA) from the constant-power loads.

        Args:
            extra_loads: Additional (bus, p_w, q_var) loads split equally over the bus phases
        """
        injections = np.zeros(len(self.nodes), dtype=complex)
        for load in self.loads:
            injections[self.node_index[(load.bus, load.phase)]] -= load.s_va
        return injections + self.extra_load_injections(extra_loads or ())

    def extra_load_injections(self, extra_loads: Sequence[Tuple[str, float, float]]) -> np.ndarray:
        """Per-node injection (VA) of (bus, p_w, q_var) loads split equally over the bus phases."""
        injections = np.zeros(len(self.nodes), dtype=complex)
        for bus, p, q in extra_loads:
            if bus not in self.buses:
                raise ConfigurationError(f"Disturbance at unknown bus {bus}")
            nodes = self.bus_nodes(bus)
            injections[nodes] -= complex(p, q) / len(nodes)
        return injections

    def der_injections(self, outputs: Dict[str, Tuple[float, float]]) -> np.ndarray:
        """Per-node complex injection (VA) from DER outputs (p_w, q_var) split over their phases."""
        injections = np.zeros(len(self.nodes), dtype=complex)
        for der_id, (p, q) in outputs.items():
            site = self.ders[der_id]
            for ph in site.phases:
                injections[self.node_index[(site.bus, ph)]] += complex(p, q) / len(site.phases)
        return injections

    def total_load(self) -> complex:
        return sum((load.s_va for load in self.loads), 0j)

    def downstream_buses(self, bus: str) -> List[str]:
        """Buses fed through `bus` (including it), seen from the slack bus."""
        tree = nx.bfs_tree(nx.Graph(self.graph), self.slack_bus)
        return [bus] + list(nx.descendants(tree, bus))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name={self.name}, buses={len(self.buses)}, nodes={len(self.nodes)})"
