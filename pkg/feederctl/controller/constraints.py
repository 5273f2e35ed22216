"""Dual layout and the affine constraint structure g(y, x_parent) = C y + D x_parent + b."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..config.defaults import DUAL_GROUPS


@dataclass(frozen=True)
class DualLayout:
    """
    Shape of an area's dual vector d = col(λ, μ, η, ψ, γ, ν, ζ).

    λ..ψ are scalars; γ and ν have one entry per monitored voltage node and
    ζ one per monitored line phase. Measurements stack as col(p0, q0, v, i)
    with one p0/q0 entry per interface phase.
    """
    n_phases: int
    n_v: int
    n_i: int

    @property
    def size(self) -> int:
        return 4 + 2 * self.n_v + self.n_i

    @property
    def n_measurements(self) -> int:
        return 2 * self.n_phases + self.n_v + self.n_i

    def group_sizes(self) -> List[int]:
        return [1, 1, 1, 1, self.n_v, self.n_v, self.n_i]

    def groups(self) -> List[str]:
        """Dual group name per component."""
        names = []
        for group, count in zip(DUAL_GROUPS, self.group_sizes()):
            names.extend([group] * count)
        return names

    def slice(self, group: str) -> slice:
        start = 0
        for name, count in zip(DUAL_GROUPS, self.group_sizes()):
            if name == group:
                return slice(start, start + count)
            start += count
        raise ValueError(f"Unknown dual group: {group}. Available: {list(DUAL_GROUPS)}")

    def expand(self, values: Dict[str, float], default: float = 0.0) -> np.ndarray:
        """Per-component vector from per-group values."""
        return np.array([values.get(group, default) for group in self.groups()], dtype=float)


def build_cdb(
    layout: DualLayout,
    tracking: bool,
    e_p: float,
    e_q: float,
    v_max: float,
    v_min: float,
    i_max: Union[float, np.ndarray],
    v_scale: Union[float, np.ndarray] = 1.0,
    selection: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Constraint matrices of one area.

    Rows follow the dual layout: ±(1ᵀp0 − p_set), ±(1ᵀq0 − q_set) switched by
    `tracking`, then ±v against its limits and i against its limit. `v_scale`
    converts per-unit voltages into the unit the controller works in.

    Args:
        selection: (T^p, T^q) of the parent; when omitted D acts on (p_set, q_set)

    Returns:
        (C, D, b)
    """
    s = 1.0 if tracking else 0.0
    m, n_v, n_i = layout.n_phases, layout.n_v, layout.n_i
    scale = np.broadcast_to(np.asarray(v_scale, dtype=float), (n_v,))
    ones = np.ones(m)

    C = np.zeros((layout.size, layout.n_measurements))
    C[0, :m] = s * ones
    C[1, :m] = -s * ones
    C[2, m : 2 * m] = s * ones
    C[3, m : 2 * m] = -s * ones
    v_cols = slice(2 * m, 2 * m + n_v)
    C[4 : 4 + n_v, v_cols] = np.diag(scale)
    C[4 + n_v : 4 + 2 * n_v, v_cols] = -np.diag(scale)
    C[4 + 2 * n_v :, 2 * m + n_v :] = np.eye(n_i)

    D_pair = np.zeros((layout.size, 2))
    D_pair[0, 0] = -s
    D_pair[1, 0] = s
    D_pair[2, 1] = -s
    D_pair[3, 1] = s
    D = D_pair if selection is None else D_pair @ np.vstack(selection)

    i_limit = np.broadcast_to(np.asarray(i_max, dtype=float), (n_i,))
    b = -np.concatenate(
        [
            [e_p, e_p, e_q, e_q],
            v_max * scale,
            -v_min * scale,
            i_limit,
        ]
    )
    return C, D, b
