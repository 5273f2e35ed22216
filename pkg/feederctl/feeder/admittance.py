"""Nodal admittance assembly."""

import numpy as np
import scipy.linalg

from ..exceptions import ConfigurationError
from .network import FeederModel, Line


def line_admittance(line: Line) -> np.ndarray:
    """Series admittance matrix y = z⁻¹ of a line (S)."""
    z = np.asarray(line.z, dtype=complex)
    scale = np.max(np.abs(z)) if z.size else 0.0
    if scale == 0.0 or np.linalg.cond(z) > 1e12:
        raise ConfigurationError(f"Line {line.id}: zero or singular impedance")
    return scipy.linalg.inv(z)


def line_node_indices(model: FeederModel, line: Line) -> tuple:
    """(from-node indices, to-node indices) ordered like line.phases."""
    from_idx = [model.node_index[(line.from_bus, ph)] for ph in line.phases]
    to_idx = [model.node_index[(line.to_bus, ph)] for ph in line.phases]
    return from_idx, to_idx


def build_admittance(model: FeederModel) -> np.ndarray:
    """
    Assemble the complex nodal admittance matrix over all (bus, phase) nodes.

    Raises:
        ConfigurationError: duplicate branch, disconnected bus or singular impedance
    """
    model.check_topology()

    n = len(model.nodes)
    y_bus = np.zeros((n, n), dtype=complex)
    for line in model.lines.values():
        y = line_admittance(line)
        f, t = line_node_indices(model, line)
        y_bus[np.ix_(f, f)] += y
        y_bus[np.ix_(t, t)] += y
        y_bus[np.ix_(f, t)] -= y
        y_bus[np.ix_(t, f)] -= y
    return y_bus
