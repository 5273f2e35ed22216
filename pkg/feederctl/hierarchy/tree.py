"""Control-area tree."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..exceptions import ConfigurationError
from ..feeder.network import FeederModel
from ..models.partition import PartitionConfig
from .der import DerSpec
from .vder import vder_capacity, vder_cost

logger = logging.getLogger(__name__)


def vder_id(child: str) -> str:
    return f"vder_{child}"


@dataclass(frozen=True)
class Area:
    id: str
    parent: Optional[str]
    interface_bus: str
    buses: Tuple[str, ...]
    monitored_buses: Tuple[str, ...]
    monitored_lines: Tuple[str, ...]
    der_ids: Tuple[str, ...]
    children: Tuple[str, ...] = ()

    @property
    def vder_ids(self) -> Tuple[str, ...]:
        return tuple(vder_id(child) for child in self.children)

    @property
    def is_root(self) -> bool:
        return self.parent is None


class ControlAreaTree:
    """
    Rooted tree of control areas with their (virtual) DERs.

    Each area's decision vector stacks its physical DERs first, then one
    virtual DER per child, as (p, q) pairs.
    """

    def __init__(self, areas: Sequence[Area], der_specs: Dict[str, DerSpec]):
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(area.id for area in areas)
        for area in areas:
            if area.parent is not None:
                if area.parent not in self.graph:
                    raise ConfigurationError(f"Area {area.id}: unknown parent {area.parent}")
                self.graph.add_edge(area.parent, area.id)
        if not nx.is_arborescence(self.graph):
            raise ConfigurationError("Control areas must form a directed rooted tree")

        children = {area.id: tuple(sorted(self.graph.successors(area.id), key=[a.id for a in areas].index)) for area in areas}
        self.areas: Dict[str, Area] = {
            area.id: Area(
                area.id,
                area.parent,
                area.interface_bus,
                area.buses,
                area.monitored_buses,
                area.monitored_lines,
                area.der_ids,
                children[area.id],
            )
            for area in areas
        }
        self.root = next(area.id for area in areas if area.parent is None)
        self.order: List[str] = [self.root] + [child for _, child in nx.bfs_edges(self.graph, self.root)]
        self.index: Dict[str, int] = {area_id: k for k, area_id in enumerate(self.order)}
        self.physical = dict(der_specs)
        self.specs: Dict[str, DerSpec] = dict(der_specs)
        for area_id in reversed(self.order):
            for child in self.areas[area_id].children:
                self.specs[vder_id(child)] = self._aggregate(child)

    @classmethod
    def from_partition(
        cls,
        partition: PartitionConfig,
        model: FeederModel,
        der_specs: Dict[str, DerSpec],
    ) -> "ControlAreaTree":
        """Validate a partition against the feeder and build the tree."""
        owner: Dict[str, str] = {}
        for area in partition.areas:
            for bus in area.buses:
                if bus not in model.buses:
                    raise ConfigurationError(f"Area {area.id}: unknown bus {bus}")
                if bus in owner:
                    raise ConfigurationError(f"Bus {bus} owned by both {owner[bus]} and {area.id}")
                owner[bus] = area.id
        unowned = sorted(set(model.buses) - set(owner))
        if unowned:
            raise ConfigurationError(f"Buses not assigned to any area: {unowned}")

        der_owner: Dict[str, str] = {}
        areas = []
        for area in partition.areas:
            for der in area.ders:
                if der not in der_specs:
                    raise ConfigurationError(f"Area {area.id}: unknown DER {der}")
                if der in der_owner:
                    raise ConfigurationError(f"DER {der} assigned to both {der_owner[der]} and {area.id}")
                if owner.get(der_specs[der].bus) != area.id:
                    raise ConfigurationError(f"Area {area.id}: DER {der} sits outside the area")
                der_owner[der] = area.id
            if area.parent is None and owner.get(area.interface_bus) != area.id:
                raise ConfigurationError(f"Root area {area.id} must own its interface bus")
            if area.parent is not None and owner.get(area.interface_bus) != area.parent:
                raise ConfigurationError(f"Area {area.id}: interface bus {area.interface_bus} must belong to the parent")
            for line in area.monitored_lines:
                if line not in model.lines:
                    raise ConfigurationError(f"Area {area.id}: monitored line {line} not in feeder")
            monitored = area.monitored_buses
            if monitored is None:
                monitored = [bus for bus in area.buses if bus != area.interface_bus]
            for bus in monitored:
                if bus not in model.buses:
                    raise ConfigurationError(f"Area {area.id}: monitored bus {bus} not in feeder")
            areas.append(
                Area(
                    id=area.id,
                    parent=area.parent,
                    interface_bus=area.interface_bus,
                    buses=tuple(area.buses),
                    monitored_buses=tuple(monitored),
                    monitored_lines=tuple(area.monitored_lines),
                    der_ids=tuple(area.ders),
                )
            )
        unassigned = sorted(set(der_specs) - set(der_owner))
        if unassigned:
            logger.warning(f"DERs not assigned to any area stay at zero deviation: {unassigned}")

        tree = cls(areas, {der: der_specs[der] for der in der_owner})
        logger.info(f"Control-area tree: {len(tree.areas)} areas, order {tree.order}")
        return tree

    def _aggregate(self, child: str) -> DerSpec:
        physical = [self.physical[der] for der in self.descendant_ders(child)]
        if not physical:
            raise ConfigurationError(f"Area {child} and its descendants have no DERs to aggregate")
        area = self.areas[child]
        parent_interface = area.interface_bus
        return DerSpec(
            id=vder_id(child),
            kind="virtual",
            bus=parent_interface,
            phases=(),
            cost=vder_cost([spec.cost for spec in physical]).reflected(),
            box=vder_capacity([spec.box for spec in physical]).reflected(),
            child_area=child,
        )

    # Structure

    @property
    def adjacency(self) -> np.ndarray:
        """N×N matrix over `order`, A_ij = 1 iff i is the parent of j."""
        n = len(self.order)
        matrix = np.zeros((n, n))
        for parent, child in self.graph.edges:
            matrix[self.index[parent], self.index[child]] = 1.0
        return matrix

    def parent(self, area_id: str) -> Optional[str]:
        return self.areas[area_id].parent

    def children(self, area_id: str) -> Tuple[str, ...]:
        return self.areas[area_id].children

    def depth(self, area_id: str) -> int:
        return nx.shortest_path_length(self.graph, self.root, area_id)

    def subtree(self, area_id: str) -> List[str]:
        desc = nx.descendants(self.graph, area_id)
        return [area_id] + [a for a in self.order if a in desc]

    def descendant_ders(self, area_id: str) -> List[str]:
        """Physical DERs of an area and all areas below it."""
        return [der for a in self.subtree(area_id) for der in self.areas[a].der_ids]

    def downstream_buses(self, area_id: str) -> List[str]:
        return [bus for a in self.subtree(area_id) for bus in self.areas[a].buses]

    def stacked_channels(self, area_id: str) -> List[str]:
        """DER and VDER ids in decision-vector order."""
        area = self.areas[area_id]
        return list(area.der_ids) + list(area.vder_ids)

    def channel_specs(self, area_id: str) -> List[DerSpec]:
        return [self.specs[channel] for channel in self.stacked_channels(area_id)]

    def strong_convexity(self, area_id: str) -> float:
        """m_i = 2·min diagonal of C'' over the area's DERs and VDERs (inf when empty)."""
        specs = self.channel_specs(area_id)
        return min((spec.cost.strong_convexity for spec in specs), default=float("inf"))

    def selection_maps(self, parent: str, child: str) -> Tuple[np.ndarray, np.ndarray]:
        return selection_maps(self, parent, child)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(areas={self.order})"


def selection_maps(tree: ControlAreaTree, parent: str, child: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row selectors (T^p, T^q) of a child's VDER inside the parent's stacked x.

    Raises:
        ConfigurationError: child is not a child of parent
    """
    if parent not in tree.areas or child not in tree.areas[parent].children:
        raise ConfigurationError(f"{child} is not a child area of {parent}")
    channels = tree.stacked_channels(parent)
    position = channels.index(vder_id(child))
    t_p = np.zeros(2 * len(channels))
    t_q = np.zeros(2 * len(channels))
    t_p[2 * position] = 1.0
    t_q[2 * position + 1] = 1.0
    return t_p, t_q
