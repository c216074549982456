"""
Exception classes for Artiphon.

This module defines the exception hierarchy used throughout the package.
All exceptions inherit from ArtiphonError for consistent error handling;
``exit_code`` is what the CLI returns when the error escapes a command.
"""

from typing import Any, Dict, Optional


class ArtiphonError(Exception):
    """
    Base exception for all Artiphon exceptions.

    Attributes:
        message: Human-readable error message
        code: Error code for programmatic handling
        details: Additional error details
    """

    exit_code: int = 1

    def __init__(
        self,
        message: str,
        code: str = "ARTIPHON_ERROR",
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Initialize exception.

        Args:
            message: Error message
            code: Error code
            details: Additional error details
        """
        self.message = message
        self.code = code
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert exception to dictionary.

        Returns:
            Dictionary representation of the exception
        """
        return {
            "error": self.code,
            "message": self.message,
            "details": self.details,
        }

    def __str__(self) -> str:
        """String representation."""
        if self.details:
            return f"{self.code}: {self.message} (details: {self.details})"
        return f"{self.code}: {self.message}"


# Configuration Exceptions
class ConfigurationError(ArtiphonError):
    """Exception raised for configuration errors."""

    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code="CONFIGURATION_ERROR", details=details)


class ValidationError(ArtiphonError):
    """Exception raised for validation errors."""

    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code="VALIDATION_ERROR", details=details)


# Data Exceptions
class DataError(ArtiphonError):
    """Base exception for corpus, transcript and file-format errors."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code="DATA_ERROR", details=details)


class ParseError(DataError):
    """Exception raised when a text record cannot be parsed."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line_number: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        details = dict(details or {})
        if path is not None:
            details["path"] = path
        if line_number is not None:
            details["line"] = line_number
        super().__init__(message, details=details)
        self.code = "PARSE_ERROR"
        self.path = path
        self.line_number = line_number


class FormatError(DataError):
    """Exception raised when a binary file does not match its declared format."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "FORMAT_ERROR"


class UnsupportedEncodingError(DataError):
    """Exception raised for well-formed files in an encoding we do not decode."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "UNSUPPORTED_ENCODING"


class OverlapError(DataError):
    """Exception raised when two transcript intervals overlap."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "OVERLAP_ERROR"


class OrderError(DataError):
    """Exception raised when transcript intervals are not sorted by start."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "ORDER_ERROR"


class UnknownPhonemeError(DataError):
    """Exception raised when a symbol is not in the phoneme inventory."""

    def __init__(self, symbol: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"Unknown phoneme: {symbol}", details=details)
        self.code = "UNKNOWN_PHONEME"
        self.symbol = symbol


class IncompleteMapError(DataError):
    """Exception raised when an inventory phoneme lacks a class in some dimension."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "INCOMPLETE_MAP"


class ContradictsReferenceTableError(DataError):
    """Exception raised when a mapping file disagrees with the reference class table."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "CONTRADICTS_REFERENCE_TABLE"


class LengthMismatchError(DataError):
    """Exception raised when audio and video durations disagree beyond tolerance."""

    def __init__(
        self,
        utterance_id: str,
        audio_seconds: float,
        video_seconds: float,
        details: Optional[Dict[str, Any]] = None,
    ):
        message = (
            f"Audio/video length mismatch for {utterance_id}: "
            f"audio={audio_seconds:.3f}s video={video_seconds:.3f}s"
        )
        super().__init__(message, details=details)
        self.code = "LENGTH_MISMATCH"
        self.utterance_id = utterance_id


class InsufficientSpeakersError(DataError):
    """Exception raised when a roster cannot support the requested fold policy."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "INSUFFICIENT_SPEAKERS"


class CorpusIOError(DataError):
    """Exception raised when corpus files cannot be read or written."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "IO_ERROR"


class CheckpointError(DataError):
    """Exception raised for malformed or incompatible checkpoint files."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "CHECKPOINT_ERROR"


class IndexOutOfRangeError(DataError):
    """Exception raised when a class index falls outside [0, n_classes)."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "INDEX_OUT_OF_RANGE"


# Model Exceptions
class ModelError(ArtiphonError):
    """Base exception for model-level errors."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code="MODEL_ERROR", details=details)


class WrongModeError(ModelError):
    """Exception raised when an operation needs a different classification mode."""

    def __init__(self, expected: str, actual: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"Expected a {expected} model, got {actual}", details=details)
        self.code = "WRONG_MODE"
        self.expected = expected
        self.actual = actual


# Numeric Exceptions
class NumericError(ArtiphonError):
    """Base exception for numeric failures."""

    exit_code = 4

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code="NUMERIC_ERROR", details=details)


class ShapeMismatchError(NumericError):
    """Exception raised when operand shapes are incompatible."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "SHAPE_MISMATCH"


class NotScalarError(NumericError):
    """Exception raised when backward is called on a non-scalar tensor."""

    def __init__(self, shape: tuple, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"backward needs a scalar loss, got shape {shape}", details=details)
        self.code = "NOT_SCALAR"


class StaleTapeError(NumericError):
    """Exception raised when a consumed tape is replayed."""

    def __init__(self, message: str = "Tape already consumed by backward", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "STALE_TAPE"


class EmptyBatchError(NumericError):
    """Exception raised when a loss has no unmasked items."""

    def __init__(self, message: str = "Batch has no unmasked items", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.code = "EMPTY_BATCH"


class NonFiniteLossError(NumericError):
    """Exception raised when training produces a NaN or infinite loss."""

    def __init__(self, step: int, dump_path: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"Non-finite loss at step {step}", details=details)
        self.code = "NON_FINITE_LOSS"
        self.step = step
        self.dump_path = dump_path


# Utility functions for exception handling
def handle_exception(exc: Exception) -> Dict[str, Any]:
    """
    Convert any exception to a standard error dictionary.

    Args:
        exc: Exception to handle

    Returns:
        Error dictionary

    Example:
        >>> try:
        ...     raise ValidationError("Invalid input")
        ... except Exception as e:
        ...     error_dict = handle_exception(e)
    """
    if isinstance(exc, ArtiphonError):
        return exc.to_dict()

    # Handle standard exceptions
    return {
        "error": "INTERNAL_ERROR",
        "message": str(exc),
        "details": {"type": exc.__class__.__name__},
    }


def exit_code_for(exc: Exception) -> int:
    """Process exit code for an exception escaping a CLI command."""
    if isinstance(exc, ArtiphonError):
        return exc.exit_code
    return 1
