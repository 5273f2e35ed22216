"""Exception hierarchy for feederctl."""

from typing import Optional


class FeederCtlError(Exception):
    """Base class for all feederctl errors."""


class ConfigurationError(FeederCtlError):
    """Invalid feeder, partition or scenario configuration."""

    def __init__(
        self,
        message: str,
        file: Optional[str] = None,
        line: Optional[int] = None,
        key: Optional[str] = None,
    ):
        self.file = file
        self.line = line
        self.key = key
        location = []
        if file:
            location.append(str(file))
        if line is not None:
            location.append(f"line {line}")
        if key:
            location.append(f"key '{key}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.message = message


class UnsupportedConfigurationError(ConfigurationError):
    """Configuration that is well-formed but outside what the solver supports."""


class DivergedPlantError(FeederCtlError):
    """Power flow did not converge (infeasible loading)."""

    def __init__(self, message: str, iterations: int = 0, mismatch: float = float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.mismatch = mismatch
        self.log = None  # partial SimLog when raised from a closed-loop run


class LinearizationError(FeederCtlError):
    """Sensitivity computation failed."""


class CertificateError(FeederCtlError):
    """Numerical failure while building the stability certificate."""
