"""
sweepoutlab custom exceptions and error handling utilities.

Every numerical failure mode of the library has its own exception class so
that campaigns can skip, flag or abort a sample depending on what went wrong,
and so that the CLI can map failures onto stable exit codes.
"""

from __future__ import annotations

import logging
import traceback
from functools import wraps
from typing import Any, Dict, Optional


class SweepoutError(Exception):
    """Base exception for all sweepoutlab errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigError(SweepoutError):
    """Raised when a campaign configuration cannot be parsed or validated."""

    pass


class PreconditionError(SweepoutError):
    """Raised when an operation is called outside its documented domain."""

    pass


class SingularLine(SweepoutError):
    """The singular set of the surface is a line, not isolated points."""

    pass


class SingularityTooClose(SweepoutError):
    """A singular point lies within the forbidden radius of the domain."""

    def __init__(
        self,
        message: str,
        point: Any = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, details)
        self.point = point


class NonManifoldMesh(SweepoutError):
    """An edge of the mesh is shared by more than two triangles."""

    pass


class NearSingular(SweepoutError):
    """The gradient is too small to define a unit normal."""

    pass


class InvariantViolation(SweepoutError):
    """A constructed object failed its own invariant check."""

    pass


class ConormalDegenerate(SweepoutError):
    """Surface normal and domain normal are parallel on the boundary."""

    pass


class ClosureFailure(SweepoutError):
    """A sampled loop does not close under its expected group element."""

    pass


class NonTransverse(SweepoutError):
    """A loop meets a subbundle without crossing it transversely."""

    pass


class OutputError(SweepoutError):
    """Raised when a report or mesh file cannot be written."""

    pass


class ErrorHandler:
    """Centralized error handling utilities."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger("sweepoutlab.errors")

    def log_and_raise(
        self,
        exception_class: type[SweepoutError],
        message: str,
        original_error: Optional[Exception] = None,
        details: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Log an error and raise a sweepoutlab exception."""
        error_details = details or {}

        if original_error:
            error_details["original_error"] = str(original_error)
            error_details["original_type"] = type(original_error).__name__

        self.logger.error(f"❌ {message}")
        if original_error:
            self.logger.debug(f"Original error: {original_error}")
            self.logger.debug(f"Traceback: {traceback.format_exc()}")

        raise exception_class(message, error_details)


def handle_errors(
    exception_class: type[SweepoutError] = SweepoutError,
    logger: Optional[logging.Logger] = None,
):
    """Wrap unexpected exceptions of *func* into *exception_class*."""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            handler = ErrorHandler(logger)
            try:
                return func(*args, **kwargs)
            except SweepoutError:
                raise
            except Exception as e:
                handler.log_and_raise(exception_class, f"Error in {func.__name__}", e)

        return wrapper

    return decorator


def format_error_message(error: Exception, include_traceback: bool = False) -> str:
    """Format error messages consistently."""
    if isinstance(error, SweepoutError):
        message = f"{type(error).__name__}: {error.message}"
        if error.details:
            details = ", ".join(f"{k}={v}" for k, v in error.details.items())
            message += f" ({details})"
    else:
        message = f"{type(error).__name__}: {str(error)}"

    if include_traceback:
        message += f"\n{traceback.format_exc()}"

    return message
