"""
Exception roots shared across the toolkit.

Modules raise their own subclasses; the CLI only needs these three roots to
pick an exit status.
"""

from __future__ import annotations


class ParameterError(ValueError):
    """Raised when an argument violates an operation's precondition."""
    pass


class IntegrityError(Exception):
    """Raised when stored or loaded data is corrupted or inconsistent."""
    pass


class PrecisionError(Exception):
    """Raised when input precision is too low for the requested evaluation."""
    pass
