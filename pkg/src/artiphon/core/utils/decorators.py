"""
Useful decorators for Artiphon.

Provides decorators for timing long-running pipeline stages.
"""

import functools
import time
from typing import Any, Callable, TypeVar

from artiphon.core.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")


def timer(func: Callable[..., T]) -> Callable[..., T]:
    """
    Decorator to log execution time of a function.

    Args:
        func: Function to time

    Returns:
        Decorated function

    Example:
        >>> @timer
        ... def synthesize_corpus(spec, out_dir):
        ...     ...
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> T:
        start_time = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            duration = time.perf_counter() - start_time
            logger.info(
                "function_execution",
                function=func.__name__,
                duration_seconds=round(duration, 3),
            )

    return wrapper
