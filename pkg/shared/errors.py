"""
Standardized Error Handling for MMGPL

This module provides consistent error handling utilities across all modules.
Every error carries a machine-readable code, a message and optional details,
and maps onto one CLI exit code.

Usage:
    from shared.errors import DimensionError, ConfigError

    raise DimensionError("matmul", (2, 3), (4, 5))
    raise ConfigError("Unknown key 'graph.taus'", key="graph.taus")
"""

import json
from typing import Any, Dict, Optional, Sequence

from .config import (
    EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_NETWORK_ERROR, EXIT_NUMERIC_ERROR,
    EXIT_UNKNOWN_ERROR,
)


class MMGPLError(Exception):
    """Base class for pipeline errors with consistent structure."""

    exit_code: int = EXIT_UNKNOWN_ERROR

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Any] = None
    ):
        self.error_code = error_code or f"ERR_{self.exit_code}"
        self.message = message
        self.details = details
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": True,
            "code": self.error_code,
            "message": self.message,
            "details": self.details
        }

    def to_line(self) -> str:
        """Single-line JSON record, safe to parse from stderr."""
        return json.dumps(self.to_dict(), default=str, separators=(",", ":"))


# =============================================================================
# Configuration (exit 2)
# =============================================================================

class ConfigError(MMGPLError):
    """Invalid or unknown configuration value."""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(
            message,
            error_code="CONFIG_ERROR",
            details={"key": key} if key else None
        )


# =============================================================================
# Data (exit 3)
# =============================================================================

class DataError(MMGPLError):
    """Malformed input data or dataset files."""

    exit_code = EXIT_DATA_ERROR

    def __init__(self, message: str, details: Optional[Any] = None,
                 error_code: str = "DATA_ERROR"):
        super().__init__(message, error_code=error_code, details=details)


class BankValidationError(DataError):
    """Concept bank breaches an invariant (ragged K, empty text, duplicates)."""

    def __init__(self, message: str, location: Optional[Sequence[Any]] = None):
        super().__init__(
            message,
            details={"location": list(location)} if location is not None else None,
            error_code="BANK_INVALID"
        )


class PartitionError(DataError):
    """Volume dimensions are not divisible by the patch size."""

    def __init__(self, axis: str, size: int, patch_size: int):
        super().__init__(
            f"Axis {axis} of length {size} is not divisible by patch size {patch_size}",
            details={"axis": axis, "size": size, "patch_size": patch_size},
            error_code="PARTITION_ERROR"
        )
        self.axis = axis


class SpecError(DataError):
    """SynthSpec fields are inconsistent."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(
            message,
            details={"field": field} if field else None,
            error_code="SPEC_ERROR"
        )


class FormatError(DataError):
    """Binary file has the wrong magic, version or length."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(
            message,
            details={"path": path} if path else None,
            error_code="FORMAT_ERROR"
        )


# =============================================================================
# Network (exit 4)
# =============================================================================

class NetworkError(MMGPLError):
    """Remote service failure."""

    exit_code = EXIT_NETWORK_ERROR

    def __init__(self, message: str, endpoint: Optional[str] = None,
                 error_code: str = "NETWORK_ERROR"):
        super().__init__(
            message,
            error_code=error_code,
            details={"endpoint": endpoint} if endpoint else None
        )


class FetchError(NetworkError):
    """Concept fetch failed: transport, malformed completion or too few items."""

    def __init__(self, message: str, endpoint: Optional[str] = None):
        super().__init__(message, endpoint=endpoint, error_code="FETCH_ERROR")


# =============================================================================
# Numeric (exit 5)
# =============================================================================

class NumericError(MMGPLError):
    """Numeric contract breach."""

    exit_code = EXIT_NUMERIC_ERROR

    def __init__(self, message: str, details: Optional[Any] = None,
                 error_code: str = "NUMERIC_ERROR"):
        super().__init__(message, error_code=error_code, details=details)


class DimensionError(NumericError, ValueError):
    """Operand shapes do not agree."""

    def __init__(self, op: str, *shapes: Sequence[int]):
        shown = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(
            f"{op}: incompatible shapes {shown}",
            details={"op": op, "shapes": [list(s) for s in shapes]},
            error_code="DIMENSION_ERROR"
        )


class DomainError(NumericError, ValueError):
    """Argument outside the operation's domain."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(
            message,
            details={"index": index} if index is not None else None,
            error_code="DOMAIN_ERROR"
        )
        self.index = index


class LabelIndexError(NumericError, IndexError):
    """Label or category index out of range."""

    def __init__(self, value: int, upper: int):
        super().__init__(
            f"Index {value} out of range [0, {upper})",
            details={"value": value, "upper": upper},
            error_code="INDEX_ERROR"
        )


class ContractError(NumericError):
    """API used outside its contract (backward misuse, label leakage)."""

    def __init__(self, message: str):
        super().__init__(message, error_code="CONTRACT_ERROR")


class NonFiniteLossError(NumericError):
    """Training loss became NaN or infinite."""

    def __init__(self, epoch: int, value: float):
        super().__init__(
            f"Non-finite training loss {value} at epoch {epoch}",
            details={"epoch": epoch, "value": value},
            error_code="NAN_LOSS"
        )

