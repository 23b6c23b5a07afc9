"""
Shared utilities package for MMGPL.

This package contains code used across all pipeline modules:

Modules:
- errors: Standardized error hierarchy with CLI exit codes
- config: Default constants, grouped by owning module
- utils: Text helpers (clean_text, split_words, strip_numbering)

Usage:
    from shared.errors import DimensionError
    from shared.config import DEFAULT_PATCH_SIZE
    from shared.utils import split_words
"""

from .utils import clean_text, split_words, strip_numbering
from .errors import (
    MMGPLError, ConfigError, DataError, BankValidationError, PartitionError,
    SpecError, FormatError, NetworkError, FetchError, NumericError,
    DimensionError, DomainError, LabelIndexError, ContractError,
    NonFiniteLossError,
)

__all__ = [
    # Utils
    'clean_text', 'split_words', 'strip_numbering',
    # Errors
    'MMGPLError', 'ConfigError', 'DataError', 'BankValidationError',
    'PartitionError', 'SpecError', 'FormatError', 'NetworkError', 'FetchError',
    'NumericError', 'DimensionError', 'DomainError', 'LabelIndexError',
    'ContractError', 'NonFiniteLossError',
]
