"""
Logging setup shared by the CLI and the test helpers.
"""
import logging
import os
import sys
from typing import Optional

LOG_LEVEL_ENV = "GRIDCON_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> None:
    """
    Configure a single stderr handler for the ``gridcon`` process.

    Args:
        level: Log level name; falls back to $GRIDCON_LOG_LEVEL, then INFO
    """
    level_name = (level or os.environ.get(LOG_LEVEL_ENV) or "INFO").upper()
    numeric = logging.getLevelName(level_name)
    if not isinstance(numeric, int):
        numeric = logging.INFO

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(numeric)
