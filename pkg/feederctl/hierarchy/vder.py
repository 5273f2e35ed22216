"""Aggregation of a child area into a virtual DER."""

from typing import Literal, Sequence

import numpy as np

from ..exceptions import ConfigurationError
from .der import Box, QuadraticCost


def vder_cost(costs: Sequence[QuadraticCost], offset_rule: Literal["printed", "exact"] = "printed") -> QuadraticCost:
    """
    Equivalent cost of a set of DERs sharing a total set-point.

    The curvature is the parallel combination C''_v = (Σ C''⁻¹)⁻¹. The linear
    term follows from f(x) = (x + ζ)ᵀ C''_v (x + ζ) with ζ = 2 Σ C''⁻¹ C'
    ("printed", the default) or ζ = ½ Σ C''⁻¹ C' ("exact", the infimal
    convolution of the costs). Both coincide when every C' is zero; only
    "exact" is associative under nesting when some C' is not.
    """
    if not costs:
        raise ConfigurationError("Cannot aggregate an empty DER list")
    inverse = np.sum([1.0 / np.asarray(cost.c2) for cost in costs], axis=0)
    c2 = 1.0 / inverse
    weighted = np.sum([np.asarray(cost.c1) / np.asarray(cost.c2) for cost in costs], axis=0)
    zeta = (0.5 if offset_rule == "exact" else 2.0) * weighted
    c1 = 2.0 * c2 * zeta
    return QuadraticCost((float(c2[0]), float(c2[1])), (float(c1[0]), float(c1[1])))


def vder_capacity(boxes: Sequence[Box]) -> Box:
    """Minkowski sum of boxes."""
    if not boxes:
        raise ConfigurationError("Cannot aggregate an empty DER list")
    lower = np.sum([box.lower for box in boxes], axis=0)
    upper = np.sum([box.upper for box in boxes], axis=0)
    return Box((float(lower[0]), float(lower[1])), (float(upper[0]), float(upper[1])))
