"""The ``PySpps`` logger.

Records go to stderr. The level starts at ``SPPS_LOG_LEVEL`` (``WARNING`` when unset) and the
command line raises it with ``-v``.
"""

import logging
import os

__all__ = ["LOG_LEVEL_ENV", "logger", "set_verbosity"]

LOG_LEVEL_ENV = "SPPS_LOG_LEVEL"


def _initial_level() -> int:
    level = getattr(logging, os.getenv(LOG_LEVEL_ENV, "WARNING").upper(), None)
    return level if isinstance(level, int) else logging.WARNING


logger = logging.getLogger("PySpps")
logger.setLevel(_initial_level())

_handler = logging.StreamHandler()
_handler.setFormatter(
    logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
)
logger.addHandler(_handler)


def set_verbosity(verbosity: int):
    """INFO for one ``-v``, DEBUG for two or more; zero keeps the current level."""
    if verbosity >= 2:
        logger.setLevel(logging.DEBUG)
    elif verbosity == 1:
        logger.setLevel(logging.INFO)
