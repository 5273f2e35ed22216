"""Plants evaluated by the closed-loop engine."""

from .base import Plant, PlantContext, PlantSnapshot
from .nonlinear import NonlinearPlant
from .linear import LinearPlant
from .factory import PlantFactory

__all__ = [
    "Plant",
    "PlantContext",
    "PlantSnapshot",
    "NonlinearPlant",
    "LinearPlant",
    "PlantFactory",
]
