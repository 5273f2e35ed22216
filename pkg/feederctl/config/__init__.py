"""Configuration modules for feederctl."""

from .settings import Settings, get_settings
from .defaults import (
    CONTROLLER_DEFAULTS,
    DER_DEFAULTS,
    DUAL_GROUPS,
    get_dual_group,
    regularization_coefficients,
)

__all__ = [
    "Settings",
    "get_settings",
    "CONTROLLER_DEFAULTS",
    "DER_DEFAULTS",
    "DUAL_GROUPS",
    "get_dual_group",
    "regularization_coefficients",
]
