"""Local controllers of the control-area hierarchy."""

from .constraints import DualLayout, build_cdb
from .state import LcState
from .local_controller import (
    LocalController,
    dual_update,
    lc_step,
    lpf_vder,
    pid_augment,
    primal_update,
)

__all__ = [
    "DualLayout",
    "build_cdb",
    "LcState",
    "LocalController",
    "dual_update",
    "lc_step",
    "lpf_vder",
    "pid_augment",
    "primal_update",
]
