"""Control-area hierarchy: DER specifications, virtual DERs and the area tree."""

from .der import Box, DerSpec, QuadraticCost
from .vder import vder_capacity, vder_cost
from .tree import Area, ControlAreaTree, selection_maps, vder_id

__all__ = [
    "Box",
    "DerSpec",
    "QuadraticCost",
    "vder_capacity",
    "vder_cost",
    "Area",
    "ControlAreaTree",
    "selection_maps",
    "vder_id",
]
