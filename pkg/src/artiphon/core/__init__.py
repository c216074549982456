"""
Core infrastructure for Artiphon.

This module provides foundational components including:
- Configuration management
- Structured logging
- Exception classes
- Utility functions
"""

from artiphon.core.config import Settings, get_settings, settings
from artiphon.core.exceptions import (
    ArtiphonError,
    CheckpointError,
    ConfigurationError,
    ContradictsReferenceTableError,
    CorpusIOError,
    DataError,
    EmptyBatchError,
    FormatError,
    IncompleteMapError,
    IndexOutOfRangeError,
    InsufficientSpeakersError,
    LengthMismatchError,
    ModelError,
    NonFiniteLossError,
    NotScalarError,
    NumericError,
    OrderError,
    OverlapError,
    ParseError,
    ShapeMismatchError,
    StaleTapeError,
    UnknownPhonemeError,
    UnsupportedEncodingError,
    ValidationError,
    WrongModeError,
    exit_code_for,
    handle_exception,
)
from artiphon.core.logging import LoggerAdapter, get_logger, logger, setup_logging

__all__ = [
    # Configuration
    "Settings",
    "get_settings",
    "settings",
    # Logging
    "LoggerAdapter",
    "get_logger",
    "logger",
    "setup_logging",
    # Exceptions
    "ArtiphonError",
    "CheckpointError",
    "ConfigurationError",
    "ContradictsReferenceTableError",
    "CorpusIOError",
    "DataError",
    "EmptyBatchError",
    "FormatError",
    "IncompleteMapError",
    "IndexOutOfRangeError",
    "InsufficientSpeakersError",
    "LengthMismatchError",
    "ModelError",
    "NonFiniteLossError",
    "NotScalarError",
    "NumericError",
    "OrderError",
    "OverlapError",
    "ParseError",
    "ShapeMismatchError",
    "StaleTapeError",
    "UnknownPhonemeError",
    "UnsupportedEncodingError",
    "ValidationError",
    "WrongModeError",
    "exit_code_for",
    "handle_exception",
]
