"""Shared fixtures: the shipped 5-bus feeder and scenario setups."""

import pytest

from feederctl.feeder import FeederModel, PowerFlowSolver
from feederctl.presets import PRESET_DIR, preset_path
from feederctl.sim import ScenarioSetup, load_feeder


@pytest.fixture(scope="session")
def five_bus_config():
    return load_feeder(PRESET_DIR / "feeders" / "5bus.json")


@pytest.fixture(scope="session")
def five_bus_model(five_bus_config):
    return FeederModel.from_config(five_bus_config)


@pytest.fixture(scope="session")
def five_bus_solution(five_bus_model):
    solver = PowerFlowSolver(five_bus_model)
    return solver.solve(five_bus_model.load_injections())


@pytest.fixture(scope="session")
def one_area_setup():
    return ScenarioSetup.from_file(preset_path("5bus-step-1ca"))


@pytest.fixture(scope="session")
def two_area_setup():
    return ScenarioSetup.from_file(preset_path("5bus-step-2ca"))
