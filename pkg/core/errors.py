"""
Exception hierarchy for the gridcon framework.

Library code raises these; ``cli.py`` maps them to exit codes.
"""
from typing import Any, Optional


class GridconError(Exception):
    """Base class for all gridcon errors."""


class InputError(GridconError, ValueError):
    """Invalid numeric input to a model or solver."""


class DimensionError(InputError):
    """Array arguments do not match the network dimension."""


class TopologyError(GridconError):
    """Network graph is invalid (disconnected, dangling endpoints, slack count)."""


class DegenerateBranchError(TopologyError):
    """Branch with zero series impedance."""


class TapLimitError(GridconError):
    """Requested tap position lies outside the transformer's tap limits."""


class DivergenceError(GridconError):
    """An iterative solver did not converge."""

    def __init__(self, message: str, mismatch: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.mismatch = mismatch
        self.iterations = iterations


class UnobservableError(GridconError):
    """State estimation gain matrix is numerically singular."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class ConfigError(GridconError):
    """Scenario, network or settings file is invalid."""

    def __init__(self, message: str, source: Optional[str] = None, field: Optional[Any] = None):
        location = ""
        if source:
            location += f"{source}: "
        if field is not None:
            location += f"[{field}] "
        super().__init__(f"{location}{message}")
        self.message = message
        self.source = source
        self.field = field


class BusError(GridconError):
    """Base class for register-bus failures."""


class ProtocolError(BusError):
    """Malformed frame, unknown asset or unknown register."""


class AccessDeniedError(BusError):
    """Write attempted on a read-only register."""


class BusTimeoutError(BusError):
    """No response within the request timeout."""
