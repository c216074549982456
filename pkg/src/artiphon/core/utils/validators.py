"""
Common validation utilities.

Provides reusable checks that raise the package's ValidationError with
structured details.
"""

from typing import Any, List, Optional, Sequence

from artiphon.core.exceptions import ValidationError


def validate_number_range(
    value: float,
    min_value: Optional[float] = None,
    max_value: Optional[float] = None,
    field_name: str = "value",
) -> float:
    """
    Validate number is within range.

    Args:
        value: Number to validate
        min_value: Minimum value (inclusive)
        max_value: Maximum value (inclusive)
        field_name: Name of the field (for error messages)

    Returns:
        Validated number

    Raises:
        ValidationError: If value is out of range

    Example:
        >>> validate_number_range(0.1, min_value=0.0, field_name="lambda")
        0.1
    """
    if min_value is not None and value < min_value:
        raise ValidationError(
            f"{field_name} must be at least {min_value}",
            details={"value": value, "min_value": min_value},
        )

    if max_value is not None and value > max_value:
        raise ValidationError(
            f"{field_name} must not exceed {max_value}",
            details={"value": value, "max_value": max_value},
        )

    return value


def validate_choice(value: Any, choices: Sequence[Any], field_name: str = "value") -> Any:
    """
    Validate value is one of the allowed choices.

    Args:
        value: Value to validate
        choices: Allowed values
        field_name: Name of the field (for error messages)

    Returns:
        Validated value

    Raises:
        ValidationError: If value is not allowed
    """
    if value not in choices:
        raise ValidationError(
            f"{field_name} must be one of {list(choices)}",
            details={"value": value, "choices": list(choices)},
        )
    return value


def validate_non_empty(value: List[Any], field_name: str = "value") -> List[Any]:
    """
    Validate a list is non-empty.

    Raises:
        ValidationError: If the list is empty
    """
    if not value:
        raise ValidationError(f"{field_name} must not be empty", details={"field": field_name})
    return value
