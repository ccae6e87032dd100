"""
Observability Layer - Logging.

This package provides:
- Consistent stderr logging under the "brwre" namespace
- Level control from the run configuration
"""

__all__ = ["get_logger", "configure_logging"]

from observability.logger import configure_logging, get_logger
