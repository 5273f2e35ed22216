"""Scenario wiring: feeder, control-area tree, baseline, sensitivities and controllers."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..controller.constraints import DualLayout
from ..controller.local_controller import LocalController
from ..exceptions import ConfigurationError
from ..feeder.linearize import OperatingPoint
from ..feeder.measure import AreaScope, MeasurementVector, measure
from ..feeder.network import FeederModel
from ..feeder.power_flow import PowerFlowSolver
from ..feeder.synthetic import synthetic_radial_feeder
from ..hierarchy.der import DerSpec
from ..hierarchy.tree import ControlAreaTree
from ..models.feeder import FeederConfig, SyntheticFeederConfig
from ..models.loader import apply_overrides, read_json, validate_data
from ..models.partition import PartitionConfig
from ..models.scenario import ScenarioConfig
from ..plant.base import Plant, PlantContext
from ..plant.factory import PlantFactory
from ..stability.certificate import CertificateInputs
from ..stability.global_model import GlobalModel, VderModel, build_global_K, load_sensitivities

logger = logging.getLogger(__name__)


def _load_generated(path: Path, data: Dict[str, Any], text: str) -> Tuple[FeederConfig, PartitionConfig]:
    config = validate_data(data, SyntheticFeederConfig, path, text)
    return synthetic_radial_feeder(config)


def load_feeder(path: Path) -> FeederConfig:
    """Load a feeder file (explicit or generated)."""
    data, text = read_json(Path(path))
    if "generator" in data:
        return _load_generated(Path(path), data, text)[0]
    return validate_data(data, FeederConfig, Path(path), text)


def load_partition(path: Path) -> PartitionConfig:
    """Load a partition file (explicit or generated)."""
    data, text = read_json(Path(path))
    if "generator" in data:
        return _load_generated(Path(path), data, text)[1]
    return validate_data(data, PartitionConfig, Path(path), text)


def load_scenario(path: Path, overrides: Sequence[str] = ()) -> Tuple[ScenarioConfig, List[Tuple[str, Any]]]:
    """Load a scenario file with `key=value` overrides applied before validation."""
    path = Path(path)
    data, text = read_json(path)
    applied = apply_overrides(data, overrides) if overrides else []
    return validate_data(data, ScenarioConfig, path, text), applied


@dataclass
class ScenarioSetup:
    """
    A scenario ready to simulate or certify.

    All DER and VDER set-points are deviations from the baseline operating
    point (every DER at zero, scheduled loads only).
    """
    scenario: ScenarioConfig
    model: FeederModel
    tree: ControlAreaTree
    scopes: Dict[str, AreaScope]
    solver: PowerFlowSolver
    operating_point: OperatingPoint
    baseline: Dict[str, MeasurementVector]
    global_model: GlobalModel
    controllers: Dict[str, LocalController]
    overrides: List[Tuple[str, Any]] = field(default_factory=list)
    source: Optional[Path] = None

    @classmethod
    def from_file(
        cls,
        path: Path,
        overrides: Sequence[str] = (),
        sensitivities: Optional[Path] = None,
    ) -> "ScenarioSetup":
        path = Path(path)
        scenario, applied = load_scenario(path, overrides)
        base_dir = path.parent
        feeder = load_feeder(base_dir / scenario.feeder)
        partition = load_partition(base_dir / scenario.partition)
        setup = cls.from_config(scenario, feeder, partition, sensitivities)
        setup.overrides = applied
        setup.source = path
        return setup

    @classmethod
    def from_config(
        cls,
        scenario: ScenarioConfig,
        feeder: FeederConfig,
        partition: PartitionConfig,
        sensitivities: Optional[Path] = None,
    ) -> "ScenarioSetup":
        model = FeederModel.from_config(feeder)
        der_specs = {
            der.id: DerSpec.from_config(der, model.ders[der.id].phases) for der in feeder.ders
        }
        tree = ControlAreaTree.from_partition(partition, model, der_specs)

        unknown = sorted(set(scenario.areas) - set(tree.areas))
        if unknown:
            raise ConfigurationError(f"Overrides for unknown areas: {unknown}", key="areas")
        for event in scenario.disturbances:
            if event.bus not in model.buses:
                raise ConfigurationError(f"Disturbance at unknown bus {event.bus}", key="disturbances")

        scopes = {
            area_id: AreaScope.build(
                model,
                area_id,
                area.interface_bus,
                tree.downstream_buses(area_id),
                area.monitored_buses,
                area.monitored_lines,
            )
            for area_id, area in tree.areas.items()
        }

        solver = PowerFlowSolver(model)
        injections = model.load_injections()
        result = solver.solve(injections)
        operating_point = OperatingPoint(injections=injections, voltages=result.voltages)
        baseline = {area_id: measure(model, result.voltages, scope) for area_id, scope in scopes.items()}
        logger.info(
            f"Baseline: head import {result.head_power.real / 1e3:.2f} kW, "
            f"{result.head_power.imag / 1e3:.2f} kvar in {result.iterations} iterations"
        )

        if sensitivities is not None:
            global_model = load_sensitivities(sensitivities, tree, scopes)
        else:
            global_model = build_global_K(model, tree, operating_point, scopes, solver=solver)

        controllers = {}
        for area_id in tree.order:
            config = scenario.controller_for(area_id)
            scope = scopes[area_id]
            controllers[area_id] = LocalController(
                area_id=area_id,
                config=config,
                specs=tree.channel_specs(area_id),
                sensitivity=global_model.local_model(area_id),
                layout=DualLayout(scope.n_phases, scope.n_v, scope.n_i),
                v_scale=scope.voltage_bases(model),
                i_max=scope.current_limits(model, config.i_max_a),
                sampling_period_s=scenario.sampling_period_s,
                children=tree.children(area_id),
            )

        return cls(
            scenario=scenario,
            model=model,
            tree=tree,
            scopes=scopes,
            solver=solver,
            operating_point=operating_point,
            baseline=baseline,
            global_model=global_model,
            controllers=controllers,
        )

    # Set-points

    def baseline_setpoint(self, area_id: str) -> Tuple[float, float]:
        """Total (p, q) import of an area at the operating point."""
        base = self.baseline[area_id]
        return float(np.sum(base.p0)), float(np.sum(base.q0))

    def root_setpoint(self, t: float) -> Tuple[float, float]:
        p, q = self.baseline_setpoint(self.tree.root)
        dp, dq = self.scenario.reference_at(t)
        return p + dp, q + dq

    def references(self, t: float) -> Dict[str, Tuple[float, float]]:
        """Absolute root set-point and child baselines at time t."""
        refs = {area_id: self.baseline_setpoint(area_id) for area_id in self.tree.order}
        refs[self.tree.root] = self.root_setpoint(t)
        return refs

    def active_loads(self, t: float) -> List[Tuple[str, float, float]]:
        return [
            (event.bus, event.p_w, event.q_var)
            for event in self.scenario.disturbances
            if event.active_at(t)
        ]

    # Derived objects

    def create_plant(self) -> Plant:
        context = PlantContext(
            model=self.model,
            tree=self.tree,
            scopes=self.scopes,
            operating_point=self.operating_point,
            global_model=self.global_model,
            solver=self.solver,
            disturbance_buses=[event.bus for event in self.scenario.disturbances],
        )
        return PlantFactory.create(self.scenario.plant, context)

    def certificate_inputs(
        self,
        vder_model: VderModel = "transfer",
        t: float = 0.0,
        offsets: Optional[Dict[str, np.ndarray]] = None,
    ) -> CertificateInputs:
        return CertificateInputs.from_controllers(
            self.controllers,
            self.tree,
            self.global_model,
            self.references(t),
            vder_model=vder_model,
            offsets=offsets,
        )

    @property
    def der_area(self) -> Dict[str, str]:
        return {der: area_id for area_id, area in self.tree.areas.items() for der in area.der_ids}
