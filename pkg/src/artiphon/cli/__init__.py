"""
Command-line interface: run configuration and the ``artiphon`` command.
"""

from artiphon.cli.run_config import RunConfig

__all__ = ["RunConfig"]
