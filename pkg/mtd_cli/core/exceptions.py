#!/usr/bin/env python3
"""Structured exception hierarchy for the MTD sensor allocation toolkit."""

from typing import Optional, Dict, Any


class MtdError(Exception):
    """Base exception for all toolkit errors."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(message)

    def __str__(self) -> str:
        if self.details:
            detail_str = ", ".join(f"{k}={v}" for k, v in self.details.items())
            return f"{self.message} ({detail_str})"
        return self.message


class ModelIOError(MtdError):
    """Raised when a model, allocation or output file cannot be read or written."""

    exit_code = 3

    def __init__(self, path: str, message: str, details: Optional[Dict[str, Any]] = None):
        self.path = path
        enhanced_details = {"path": path}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class ModelParseError(MtdError):
    """Raised when a model file is not well-formed JSON/YAML."""

    def __init__(self, path: str, message: str, details: Optional[Dict[str, Any]] = None):
        self.path = path
        enhanced_details = {"path": path}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class ModelValidationError(MtdError):
    """Raised when a model violates one of its invariants."""

    def __init__(self, field: str, value: Any, message: str,
                 details: Optional[Dict[str, Any]] = None):
        self.field = field
        self.value = value
        enhanced_details = {"field": field, "value": str(value)}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class AllocationError(MtdError):
    """Raised when a sensor allocation cannot be applied to a model."""

    def __init__(self, site: Any, message: str, details: Optional[Dict[str, Any]] = None):
        self.site = site
        enhanced_details = {"site": str(site)}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class SolverError(MtdError):
    """Raised when an LP/MILP/iterative solve does not produce an optimum."""

    exit_code = 2

    def __init__(self, status: str, message: str, details: Optional[Dict[str, Any]] = None):
        self.status = status
        enhanced_details = {"status": status}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class PolicyError(MtdError):
    """Raised when a policy is missing or undefined at a state that needs it."""

    exit_code = 2

    def __init__(self, state: Any, message: str, details: Optional[Dict[str, Any]] = None):
        self.state = state
        enhanced_details = {"state": str(state)}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class CertificateError(MtdError):
    """Raised when an independent recomputation disagrees with a MILP result."""

    exit_code = 2

    def __init__(self, expected: float, actual: float, message: str,
                 details: Optional[Dict[str, Any]] = None):
        self.expected = expected
        self.actual = actual
        enhanced_details = {"expected": f"{expected:.9g}", "actual": f"{actual:.9g}"}
        if details:
            enhanced_details.update(details)
        super().__init__(message, enhanced_details)


class InstanceTooLargeError(MtdError):
    """Raised when a brute-force enumeration would exceed its guard."""

    exit_code = 2

    def __init__(self, count: int, limit: int, details: Optional[Dict[str, Any]] = None):
        self.count = count
        self.limit = limit
        enhanced_details = {"candidates": count, "limit": limit}
        if details:
            enhanced_details.update(details)
        super().__init__("Instance too large for exhaustive enumeration", enhanced_details)


def exit_code_for(error: Exception) -> int:
    """Map an exception to the CLI exit code (0 ok, 1 validation, 2 solver, 3 I/O)."""
    if isinstance(error, MtdError):
        return error.exit_code
    if isinstance(error, OSError):
        return 3
    return 1


def format_error_for_user(error: Exception) -> str:
    """Format error message for user display."""
    if isinstance(error, MtdError):
        return f"❌ {error}"
    else:
        return f"❌ Unexpected error: {str(error)}"


def get_error_suggestions(error: Exception) -> Optional[str]:
    """Get suggestions for fixing common errors."""
    if isinstance(error, ModelIOError):
        return "💡 Check that the path exists and is readable/writable"
    elif isinstance(error, ModelParseError):
        return "💡 Check the model file for JSON/YAML syntax errors"
    elif isinstance(error, ModelValidationError):
        return f"💡 Fix the '{error.field}' entry of the model file (see model.schema.json)"
    elif isinstance(error, AllocationError):
        return "💡 Sensors may only be placed on eligible sites with a defined transition"
    elif isinstance(error, CertificateError):
        return "💡 Re-run with MTD_LOG_LEVEL=DEBUG and export the MILP with --export-lp"
    elif isinstance(error, InstanceTooLargeError):
        return "💡 Use --method milp for models of this size"
    elif isinstance(error, SolverError):
        return "💡 Try a looser --tol or export the model with --export-lp for an external solver"
    elif isinstance(error, PolicyError):
        return "💡 Every non-absorbing state needs at least one defined action"
    return None
