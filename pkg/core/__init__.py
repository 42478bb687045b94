"""
Core package for gridcon.

Holds errors, logging setup, file helpers and run traces. The simulator,
runner and pipeline import every other package and are imported by module
path (``core.pipeline``, ``core.runner``, ``core.simulator``).
"""
from .errors import (AccessDeniedError, BusError, BusTimeoutError, ConfigError, DegenerateBranchError,
                     DimensionError, DivergenceError, GridconError, InputError, ProtocolError, TapLimitError,
                     TopologyError, UnobservableError)
from .log import setup_logging
from .utils import load_json_file, load_yaml_file, save_json_file
