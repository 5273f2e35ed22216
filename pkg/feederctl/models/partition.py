"""Partition file schema: control areas over a feeder."""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AreaConfig(BaseModel):
    """One control area."""
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    parent: Optional[str] = None
    interface_bus: str = Field(..., description="Bus where the area's import is tracked")
    buses: List[str] = Field(..., min_length=1, description="Buses owned by the area")
    monitored_buses: Optional[List[str]] = Field(
        None, description="Voltage-monitored buses; defaults to the owned buses except the interface bus"
    )
    monitored_lines: List[str] = Field(default_factory=list)
    ders: List[str] = Field(default_factory=list)


class PartitionConfig(BaseModel):
    """Control-area tree definition."""
    model_config = ConfigDict(extra="forbid")

    name: str = "partition"
    areas: List[AreaConfig] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_ids(self) -> "PartitionConfig":
        ids = [area.id for area in self.areas]
        if len(set(ids)) != len(ids):
            raise ValueError("Area ids must be unique")
        roots = [area.id for area in self.areas if area.parent is None]
        if len(roots) != 1:
            raise ValueError(f"Exactly one root area required, found {roots}")
        for area in self.areas:
            if area.parent is not None and area.parent not in ids:
                raise ValueError(f"Area {area.id}: unknown parent {area.parent}")
        return self
