"""Structured error types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class MsgpError(Exception):
    """Base class for all package errors."""


class ConfigError(MsgpError):
    """Invalid configuration or invalid arguments to a public operation."""


class DataError(MsgpError):
    """Malformed or inconsistent input data."""


class NumericalError(MsgpError):
    """Numerical failure (non-finite likelihood, failed factorization, ...)."""
