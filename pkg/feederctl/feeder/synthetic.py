"""Generated radial multi-area feeders."""

import logging
import math
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np

from ..exceptions import ConfigurationError
from ..models.feeder import (
    BusConfig,
    DerConfig,
    FeederConfig,
    LineConfig,
    LoadConfig,
    SlackConfig,
    SyntheticFeederConfig,
)
from ..models.partition import AreaConfig, PartitionConfig

logger = logging.getLogger(__name__)


def _area_order(config: SyntheticFeederConfig) -> List[str]:
    tree = nx.DiGraph()
    tree.add_nodes_from(area.id for area in config.areas)
    roots = [area.id for area in config.areas if area.parent is None]
    for area in config.areas:
        if area.parent is not None:
            if area.parent not in tree:
                raise ConfigurationError(f"Synthetic area {area.id}: unknown parent {area.parent}")
            tree.add_edge(area.parent, area.id)
    if len(roots) != 1 or not nx.is_arborescence(tree):
        raise ConfigurationError("Synthetic areas must form a tree with one root")
    return list(nx.topological_sort(tree))


def _lateral_parent(position: int) -> int:
    """Chain with a lateral every third bus."""
    if position == 1:
        return 0
    return position - 2 if position % 3 == 0 and position > 2 else position - 1


def synthetic_radial_feeder(config: SyntheticFeederConfig) -> Tuple[FeederConfig, PartitionConfig]:
    """
    Build a three-phase radial feeder and its area partition.

    Every area owns `buses_per_area` buses arranged as a chain with laterals;
    child areas hang off a bus of their parent, which becomes the child's
    interface bus. The root area also owns the head bus.
    """
    rng = np.random.default_rng(config.seed) if config.seed is not None else None

    def jitter() -> float:
        return float(rng.uniform(0.5, 1.5)) if rng is not None else 1.0

    n = config.buses_per_area
    specs = {area.id: area for area in config.areas}
    order = _area_order(config)
    children: Dict[str, List[str]] = {area_id: [] for area_id in order}
    for area_id in order:
        parent = specs[area_id].parent
        if parent is not None:
            children[parent].append(area_id)

    tan_phi = math.tan(math.acos(config.load_power_factor))
    phases = ["a", "b", "c"]
    head = "head"
    buses = [BusConfig(id=head, phases=phases, base_voltage_v=config.base_voltage_v)]
    lines: List[LineConfig] = []
    loads: List[LoadConfig] = []
    ders: List[DerConfig] = []
    areas: List[AreaConfig] = []
    interface: Dict[str, str] = {order[0]: head}

    for area_id in order:
        names = [f"{area_id}_b{k}" for k in range(1, n + 1)]
        chain = [interface[area_id]] + names
        for k, name in enumerate(names, start=1):
            buses.append(BusConfig(id=name, phases=phases, base_voltage_v=config.base_voltage_v))
            scale = jitter()
            lines.append(
                LineConfig(
                    id=f"{area_id}_l{k}",
                    from_bus=chain[_lateral_parent(k)],
                    to_bus=name,
                    z_self_ohm=(config.z_self_ohm[0] * scale, config.z_self_ohm[1] * scale),
                    z_mutual_ohm=(config.z_mutual_ohm[0] * scale, config.z_mutual_ohm[1] * scale),
                    ampacity_a=config.ampacity_a,
                )
            )
            p_phase = config.load_per_bus_w * jitter() / 3.0
            for ph in phases:
                loads.append(LoadConfig(bus=name, phase=ph, p_w=p_phase, q_var=p_phase * tan_phi))

        der_ids = []
        for k in range(config.ders_per_area):
            position = int(round((k + 1) * n / config.ders_per_area))
            der_id = f"{area_id}_der{k + 1}"
            ders.append(
                DerConfig(
                    id=der_id,
                    bus=names[max(position, 1) - 1],
                    c2=config.der_c2,
                    tau_s=config.der_tau_s,
                )
            )
            der_ids.append(der_id)

        for j, child in enumerate(children[area_id]):
            position = specs[child].attach_position
            if position is None:
                position = n - j * max(n // (len(children[area_id]) + 1), 1)
            if not 1 <= position <= n:
                raise ConfigurationError(f"Synthetic area {child}: attach_position out of range")
            interface[child] = names[position - 1]

        own = ([head] if area_id == order[0] else []) + names
        areas.append(
            AreaConfig(
                id=area_id,
                parent=specs[area_id].parent,
                interface_bus=interface[area_id],
                buses=own,
                monitored_buses=names,
                monitored_lines=[f"{area_id}_l1"],
                ders=der_ids,
            )
        )

    feeder = FeederConfig(
        name=config.name,
        buses=buses,
        lines=lines,
        loads=loads,
        slack=SlackConfig(bus=head),
        ders=ders,
    )
    partition = PartitionConfig(name=f"{config.name}-partition", areas=areas)
    logger.info(f"Generated feeder '{config.name}': {len(buses)} buses, {len(ders)} DERs, {len(areas)} areas")
    return feeder, partition
