"""DER costs, capacity boxes and specifications."""

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, UnsupportedConfigurationError
from ..models.feeder import DerConfig


@dataclass(frozen=True)
class QuadraticCost:
    """f(x) = xᵀ diag(c2) x + c1ᵀ x over x = (p, q)."""
    c2: Tuple[float, float]
    c1: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if len(self.c2) != 2 or len(self.c1) != 2:
            raise ConfigurationError("Costs are defined over (p, q)")
        if min(self.c2) <= 0:
            raise ConfigurationError(f"Cost curvature must be positive, got {self.c2}")

    @classmethod
    def from_matrix(cls, c2_matrix: Sequence[Sequence[float]], c1: Sequence[float] = (0.0, 0.0)) -> "QuadraticCost":
        """Build from a full C'' matrix; only diagonal matrices are supported."""
        matrix = np.asarray(c2_matrix, dtype=float)
        if matrix.shape != (2, 2):
            raise ConfigurationError("C'' must be 2x2")
        if matrix[0, 1] != 0.0 or matrix[1, 0] != 0.0:
            raise UnsupportedConfigurationError("Only diagonal DER costs are supported")
        return cls((float(matrix[0, 0]), float(matrix[1, 1])), (float(c1[0]), float(c1[1])))

    def value(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.dot(self.c2, x * x) + np.dot(self.c1, x))

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        return 2.0 * np.asarray(self.c2) * np.asarray(x, dtype=float) + np.asarray(self.c1)

    @property
    def strong_convexity(self) -> float:
        return 2.0 * min(self.c2)

    def reflected(self) -> "QuadraticCost":
        """Cost of −x."""
        return QuadraticCost(self.c2, (-self.c1[0], -self.c1[1]))


@dataclass(frozen=True)
class Box:
    """Componentwise bounds over (p, q)."""
    lower: Tuple[float, float]
    upper: Tuple[float, float]

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ConfigurationError(f"Empty box: {self.lower} > {self.upper}")

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.asarray(self.lower) - tol) and np.all(x <= np.asarray(self.upper) + tol))

    def reflected(self) -> "Box":
        return Box((-self.upper[0], -self.upper[1]), (-self.lower[0], -self.lower[1]))


@dataclass(frozen=True)
class DerSpec:
    """
    A (virtual) DER as seen by the controller of its area.

    Virtual DERs use the child-import convention: their set-point is the
    change of power imported by the child area at its interface bus.
    """
    id: str
    kind: Literal["physical", "virtual"]
    bus: str
    phases: Tuple[str, ...]
    cost: QuadraticCost
    box: Box
    tau_s: Optional[float] = None
    child_area: Optional[str] = field(default=None)

    def __post_init__(self):
        if self.kind == "physical" and (self.tau_s is None or self.tau_s <= 0):
            raise ConfigurationError(f"DER {self.id}: time constant must be positive")
        if not self.box.contains((0.0, 0.0)):
            raise ConfigurationError(f"DER {self.id}: box must contain the origin")

    @property
    def is_virtual(self) -> bool:
        return self.kind == "virtual"

    @property
    def sign(self) -> float:
        """Injection sign of the set-point at the bus."""
        return -1.0 if self.is_virtual else 1.0

    @classmethod
    def from_config(cls, config: DerConfig, phases: Tuple[str, ...]) -> "DerSpec":
        return cls(
            id=config.id,
            kind="physical",
            bus=config.bus,
            phases=phases,
            cost=QuadraticCost(tuple(config.c2), tuple(config.c1)),
            box=Box(tuple(config.lower), tuple(config.upper)),
            tau_s=config.tau_s,
        )
