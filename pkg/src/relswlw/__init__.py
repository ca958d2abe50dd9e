"""Coupled short-wave (Dirac) / long-wave (relativistic Euler) solver on periodic grids."""
__version__ = "0.1.0"

from .config import RunConfig, parse_config, serialize_config  # noqa: E402
from .grid import Grid  # noqa: E402

__all__ = ["Grid", "RunConfig", "parse_config", "serialize_config", "__version__"]
