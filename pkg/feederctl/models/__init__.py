"""Pydantic models for feeder, partition and scenario files."""

from .feeder import (
    BusConfig,
    DerConfig,
    FeederConfig,
    LineConfig,
    LoadConfig,
    SlackConfig,
    SyntheticAreaConfig,
    SyntheticFeederConfig,
)
from .partition import AreaConfig, PartitionConfig
from .scenario import (
    ControllerConfig,
    DisturbanceEvent,
    LoggingConfig,
    ReferenceEvent,
    ScenarioConfig,
)
from .loader import apply_overrides, parse_override, read_json, validate_data

__all__ = [
    # Feeder
    "BusConfig",
    "DerConfig",
    "FeederConfig",
    "LineConfig",
    "LoadConfig",
    "SlackConfig",
    "SyntheticAreaConfig",
    "SyntheticFeederConfig",
    # Partition
    "AreaConfig",
    "PartitionConfig",
    # Scenario
    "ControllerConfig",
    "DisturbanceEvent",
    "LoggingConfig",
    "ReferenceEvent",
    "ScenarioConfig",
    # Loading
    "apply_overrides",
    "parse_override",
    "read_json",
    "validate_data",
]
