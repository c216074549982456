"""
Utility functions for Artiphon.

This module provides timing decorators and validation helpers.
"""

from artiphon.core.utils.decorators import timer
from artiphon.core.utils.validators import (
    validate_choice,
    validate_non_empty,
    validate_number_range,
)

__all__ = [
    # Decorators
    "timer",
    # Validators
    "validate_choice",
    "validate_non_empty",
    "validate_number_range",
]
