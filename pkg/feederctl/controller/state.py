"""Local controller state."""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class LcState:
    """
    One area's controller memory between ticks.

    x holds DER set-points (generation convention) and VDER set-points
    (child-import convention) as (p, q) pairs; `lpf` is the filter memory
    for the VDER coordinates.
    """
    duals: np.ndarray
    x: np.ndarray
    y_prev: Optional[np.ndarray]
    lpf: np.ndarray
    faults: int = 0
    tick: int = 0

    @classmethod
    def initial(cls, n_duals: int, n_x: int) -> "LcState":
        return cls(
            duals=np.zeros(n_duals),
            x=np.zeros(n_x),
            y_prev=None,
            lpf=np.zeros(n_x),
        )

    def evolve(self, **changes) -> "LcState":
        return replace(self, **changes)

    @property
    def dual_norm(self) -> float:
        return float(np.linalg.norm(self.duals))
