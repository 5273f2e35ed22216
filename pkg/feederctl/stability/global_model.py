"""Feeder-wide linear model coupling every area's measurements to every area's set-points."""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..feeder.linearize import Injector, OperatingPoint, SensitivityModel, linearize_many
from ..feeder.measure import AreaScope
from ..feeder.network import FeederModel
from ..feeder.power_flow import PowerFlowSolver
from ..hierarchy.tree import ControlAreaTree

logger = logging.getLogger(__name__)

VderModel = Literal["transfer", "physical"]


def area_injectors(tree: ControlAreaTree, model: FeederModel, area_id: str) -> List[Injector]:
    """Injection channels of an area's stacked decision vector."""
    injectors = []
    for spec in tree.channel_specs(area_id):
        phases = spec.phases or model.buses[spec.bus].phases
        injectors.append(Injector(spec.id, spec.bus, tuple(phases), spec.sign))
    return injectors


@dataclass(frozen=True, eq=False)
class GlobalModel:
    """
    Blocks K_ij (measurements of area i vs. decisions of area j) and offsets k_i.

    Blocks are stored with VDER columns modeled as power transfer at the child
    interface bus; the "physical" view zeroes those columns, matching a plant
    in which only physical DERs move power.
    """
    order: Tuple[str, ...]
    blocks: Dict[Tuple[str, str], np.ndarray]
    offsets: Dict[str, np.ndarray]
    vder_columns: Dict[str, np.ndarray]
    scopes: Dict[str, AreaScope]
    channels: Dict[str, Tuple[str, ...]]
    vder_model: VderModel = "transfer"

    def with_vder_model(self, vder_model: VderModel) -> "GlobalModel":
        if vder_model not in ("transfer", "physical"):
            raise ValueError(f"Unknown VDER model: {vder_model}. Available: ['transfer', 'physical']")
        return replace(self, vder_model=vder_model)

    def block(self, i: str, j: str, vder_model: Optional[VderModel] = None) -> np.ndarray:
        matrix = self.blocks[(i, j)]
        if (vder_model or self.vder_model) == "physical" and np.any(self.vder_columns[j]):
            matrix = matrix.copy()
            matrix[:, self.vder_columns[j]] = 0.0
        return matrix

    def local_model(self, area_id: str) -> SensitivityModel:
        """Area-local sensitivities (own measurements vs. own channels, transfer VDER columns)."""
        scope = self.scopes[area_id]
        return SensitivityModel.from_stacked(
            self.blocks[(area_id, area_id)],
            self.offsets[area_id],
            scope.n_phases,
            scope.n_v,
            self.channels[area_id],
        )

    def full_matrix(self, vder_model: Optional[VderModel] = None) -> np.ndarray:
        rows = [np.hstack([self.block(i, j, vder_model) for j in self.order]) for i in self.order]
        return np.vstack(rows)


def build_global_K(
    model: FeederModel,
    tree: ControlAreaTree,
    operating_point: OperatingPoint,
    scopes: Dict[str, AreaScope],
    vder_model: VderModel = "transfer",
    epsilon: Optional[float] = None,
    solver: Optional[PowerFlowSolver] = None,
) -> GlobalModel:
    """
    Linearize every area's measurements against every area's channels.

    Raises:
        LinearizationError: power flow diverged during a perturbation
    """
    injectors: List[Injector] = []
    ranges: Dict[str, slice] = {}
    for area_id in tree.order:
        area_injectors_list = area_injectors(tree, model, area_id)
        ranges[area_id] = slice(2 * len(injectors), 2 * (len(injectors) + len(area_injectors_list)))
        injectors.extend(area_injectors_list)

    ordered_scopes = [scopes[area_id] for area_id in tree.order]
    models = linearize_many(model, operating_point, injectors, ordered_scopes, epsilon, solver)

    blocks = {}
    offsets = {}
    for i in tree.order:
        stacked_K = models[i].K
        offsets[i] = models[i].offsets
        for j in tree.order:
            blocks[(i, j)] = stacked_K[:, ranges[j]]

    vder_columns = {
        area_id: np.array([spec.is_virtual for spec in tree.channel_specs(area_id) for _ in range(2)], dtype=bool)
        for area_id in tree.order
    }
    channels = {area_id: tuple(tree.stacked_channels(area_id)) for area_id in tree.order}
    logger.info(f"Global model: {len(tree.order)} areas, {len(injectors)} channels")
    return GlobalModel(
        order=tuple(tree.order),
        blocks=blocks,
        offsets=offsets,
        vder_columns=vder_columns,
        scopes=dict(scopes),
        channels=channels,
        vder_model=vder_model,
    )


def save_sensitivities(global_model: GlobalModel, path) -> None:
    """
    Write per-area local models and all global blocks to an .npz archive.

    Keys: `<area>.A/.B/.M/.H/.a/.b/.m/.h` (local models),
    `K.<i>.<j>` (global blocks), `k.<i>` (offsets), `channels.<i>`.
    """
    arrays = {"areas": np.array(global_model.order)}
    for i in global_model.order:
        local = global_model.local_model(i)
        for name in ("A", "B", "M", "H", "a", "b", "m", "h"):
            arrays[f"{i}.{name}"] = getattr(local, name)
        arrays[f"k.{i}"] = global_model.offsets[i]
        arrays[f"channels.{i}"] = np.array(global_model.channels[i], dtype=str)
        for j in global_model.order:
            arrays[f"K.{i}.{j}"] = global_model.blocks[(i, j)]
    np.savez(path, **arrays)
    logger.info(f"Saved sensitivities for {len(global_model.order)} areas to {path}")


def load_sensitivities(path, tree: ControlAreaTree, scopes: Dict[str, AreaScope]) -> GlobalModel:
    """
    Read a sensitivity archive written by save_sensitivities.

    Raises:
        ConfigurationError: archive does not match the control-area tree
    """
    try:
        archive = np.load(path, allow_pickle=False)
    except FileNotFoundError as e:
        raise ConfigurationError("file not found", file=str(path)) from e
    with archive:
        areas = [str(a) for a in archive["areas"]]
        if sorted(areas) != sorted(tree.order):
            raise ConfigurationError(f"Sensitivity archive covers areas {areas}, tree has {tree.order}", file=str(path))
        channels = {}
        for i in tree.order:
            stored = [str(c) for c in archive[f"channels.{i}"]]
            if stored != tree.stacked_channels(i):
                raise ConfigurationError(f"Sensitivity archive channels of {i} do not match the partition", file=str(path))
            channels[i] = tuple(stored)
        blocks = {(i, j): np.array(archive[f"K.{i}.{j}"]) for i in tree.order for j in tree.order}
        offsets = {i: np.array(archive[f"k.{i}"]) for i in tree.order}
    vder_columns = {
        area_id: np.array([spec.is_virtual for spec in tree.channel_specs(area_id) for _ in range(2)], dtype=bool)
        for area_id in tree.order
    }
    logger.info(f"Loaded cached sensitivities from {path}")
    return GlobalModel(
        order=tuple(tree.order),
        blocks=blocks,
        offsets=offsets,
        vder_columns=vder_columns,
        scopes=dict(scopes),
        channels=channels,
    )
