"""
Controller and DER defaults.

Gains a_k carry the unit conversion of each dual group (W²/W², W²/V², W²/A²);
the regularization coefficients c_k default to their reciprocals.
"""

from typing import Dict, Optional

# Stacking order of the dual vector
DUAL_GROUPS = ("lambda", "mu", "eta", "psi", "gamma", "nu", "zeta")

# Groups that track the parent set-point (switched by s_i)
TRACKING_GROUPS = ("lambda", "mu", "eta", "psi")

# Local controller defaults
CONTROLLER_DEFAULTS = {
    "alpha": 0.002,
    "r_primal": 1e-4,
    "r_dual": 1e-3,
    "e_p_w": 100.0,
    "e_q_var": 100.0,
    "v_max_pu": 1.05,
    "v_min_pu": 0.95,
    "sampling_period_s": 0.1,
    "gains": {
        "lambda": 1e3,
        "mu": 1e3,
        "eta": 1e3,
        "psi": 1e3,
        "gamma": 1e12,  # W²/V²
        "nu": 1e12,  # W²/V²
        "zeta": 1e7,  # W²/A²
    },
}

# Physical DER defaults
DER_DEFAULTS = {
    "tau_s": 0.2,
    "c2": (20.0, 20.0),
    "c1": (0.0, 0.0),
    "lower": (-1e6, -1e6),  # W, var
    "upper": (1e6, 1e6),
}


def get_dual_group(name: str) -> int:
    """Get the position of a dual group in the stacked dual vector."""
    if name not in DUAL_GROUPS:
        raise ValueError(f"Unknown dual group: {name}. Available: {list(DUAL_GROUPS)}")
    return DUAL_GROUPS.index(name)


def regularization_coefficients(
    gains: Dict[str, float],
    overrides: Optional[Dict[str, float]] = None,
) -> Dict[str, float]:
    """Get c_k per dual group, defaulting to 1/a_k."""
    overrides = overrides or {}
    coefficients = {}
    for group in DUAL_GROUPS:
        if group in overrides:
            coefficients[group] = overrides[group]
        elif gains.get(group, 0.0) > 0.0:
            coefficients[group] = 1.0 / gains[group]
        else:
            coefficients[group] = 0.0
    return coefficients
