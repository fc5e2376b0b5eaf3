"""
Custom exception classes and error handling utilities for the Hamiltonian descent toolkit.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from utils.logging import get_logger


class HamDescError(Exception):
    """Base exception class for all toolkit errors."""

    log_level = logging.ERROR

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

        logger = get_logger('exceptions')
        if self.context:
            context_str = ", ".join(f"{k}={v}" for k, v in self.context.items())
            logger.log(self.log_level, f"{self.__class__.__name__}: {message} (Context: {context_str})")
        else:
            logger.log(self.log_level, f"{self.__class__.__name__}: {message}")


class ValidationError(HamDescError):
    """Raised when data validation fails."""
    pass


class DomainError(ValidationError, ValueError):
    """Raised when an argument lies outside the domain of a numerical operation."""

    # Domain errors are routinely raised and caught inside line searches.
    log_level = logging.DEBUG


class RangeError(DomainError):
    """Raised when a value lies outside the range of a map being inverted."""
    pass


class ConfigurationError(HamDescError):
    """Raised when configuration is invalid."""
    pass


class ConsistencyError(ConfigurationError):
    """Raised when a kinetic energy and a growth certificate disagree on exponents."""
    pass


class MissingFieldError(ConfigurationError):
    """Raised when a certificate lacks a constant required by a method."""
    pass


class SolverError(HamDescError):
    """Raised when a numerical solver fails."""
    pass


class SubsolverError(SolverError):
    """Raised when the implicit step's inner solve does not reach its tolerance."""
    pass


class StiffnessError(SolverError):
    """Raised when the ODE integrator's step size underflows."""
    pass


class ClassificationError(SolverError):
    """Raised when a shooting trajectory cannot be classified reliably."""
    pass


class FileError(HamDescError):
    """Raised when file operations fail."""
    pass


def validate_file_exists(file_path: str):
    """Validate that a file exists and is readable."""
    path = Path(file_path)
    if not path.exists():
        raise FileError(f"File does not exist: {file_path}", context={"path": file_path})

    if not path.is_file():
        raise FileError(f"Path is not a file: {file_path}", context={"path": file_path})

    try:
        with open(path, 'r'):
            pass
    except PermissionError:
        raise FileError(f"File is not readable: {file_path}", context={"path": file_path})
