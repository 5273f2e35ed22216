"""Factory for creating plants."""

from typing import Dict, Type

from .base import Plant, PlantContext
from .linear import LinearPlant
from .nonlinear import NonlinearPlant


class PlantFactory:
    """Registry of plant implementations keyed by scenario `plant` mode."""

    _plants: Dict[str, Type[Plant]] = {
        "nonlinear": NonlinearPlant,
        "linear": LinearPlant,
    }

    @classmethod
    def create(cls, plant_type: str, context: PlantContext) -> Plant:
        """
        Create a plant for a scenario.

        Args:
            plant_type: Plant mode (nonlinear, linear)
            context: Feeder, tree, operating point and models of the scenario

        Returns:
            Plant instance
        """
        if plant_type not in cls._plants:
            available = list(cls._plants.keys())
            raise ValueError(f"Unknown plant: {plant_type}. Available: {available}")
        return cls._plants[plant_type].from_context(context)
