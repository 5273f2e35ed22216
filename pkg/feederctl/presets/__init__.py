"""
Shipped scenarios.

Scenario files live in `scenarios/` and reference feeder and partition files
in the sibling directories by relative path.
"""

from pathlib import Path
from typing import List

from ..exceptions import ConfigurationError

PRESET_DIR = Path(__file__).resolve().parent
SCENARIO_DIR = PRESET_DIR / "scenarios"

# Preset name → one-line description
PRESETS = {
    "5bus-step-1ca": "5-bus feeder, one area, 200 kW step and n5 load disturbance",
    "5bus-step-2ca": "5-bus feeder, two areas, same schedule",
    "5bus-step-2ca-lpfpid": "5-bus feeder, two areas with PD action and filtered VDER set-points",
    "5bus-tightened-limits": "5-bus feeder, one area, v_max 0.974 pu at n4 and 123 A on L3",
    "synthetic-ramp-multiarea": "6-area generated feeder, 20 kW/s stepped ramp, disturbances in CA2 and CA6",
}


def available_presets() -> List[str]:
    """Get list of shipped preset names."""
    return list(PRESETS.keys())


def preset_path(name: str) -> Path:
    """Get the scenario file of a preset."""
    if name not in PRESETS:
        raise ValueError(f"Unknown preset: {name}. Available: {available_presets()}")
    return SCENARIO_DIR / f"{name}.json"


def resolve_scenario(name_or_path: str) -> Path:
    """
    Resolve a `--scenario` argument.

    A shipped preset name wins over a relative path of the same spelling.

    Raises:
        ConfigurationError: neither a preset nor an existing file
    """
    if name_or_path in PRESETS:
        return preset_path(name_or_path)
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigurationError(
            f"file not found (presets: {', '.join(available_presets())})", file=str(path)
        )
    return path
