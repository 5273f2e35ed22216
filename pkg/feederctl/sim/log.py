"""Time-series log of a closed-loop run."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd


@dataclass
class SimLog:
    """
    One row per controller tick.

    `frame` columns carry their unit in the name (`_w`, `_var`, `_pu`, `_a`,
    `_s`); `metadata` holds scenario details the metrics need (reference
    change times, disturbance windows, area ownership of DERs).
    """
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: List[Dict[str, float]], metadata: Optional[Dict[str, Any]] = None) -> "SimLog":
        columns = list(rows[0].keys()) if rows else []
        return cls(pd.DataFrame.from_records(rows, columns=columns), dict(metadata or {}))

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def time(self) -> np.ndarray:
        return self.frame["time_s"].to_numpy()

    def column(self, name: str) -> np.ndarray:
        if name not in self.frame.columns:
            raise KeyError(f"Unknown channel: {name}. Available: {list(self.frame.columns)}")
        return self.frame[name].to_numpy()

    def columns_like(self, prefix: str, suffix: str = "") -> List[str]:
        return [c for c in self.frame.columns if c.startswith(prefix) and c.endswith(suffix)]

    @property
    def aborted(self) -> bool:
        return bool(self.metadata.get("aborted", False))

    def to_csv(self, path: Path, float_format: Optional[str] = None) -> None:
        self.frame.to_csv(path, index=False, float_format=float_format)

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, indent=2, default=str)
