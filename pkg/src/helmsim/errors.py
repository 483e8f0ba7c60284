"""Shared exception types.

Module-specific errors (frame decode errors, schema errors) live next to
the code that raises them; the types here are used across modules.
"""


class DomainError(ValueError):
    """An input is outside the mathematical domain of a formula."""


class RangeError(ValueError):
    """An input violates a documented physical or numeric range."""


class NoEquilibrium(RuntimeError):
    """A root search failed to bracket or converge on a steady state."""


class ModeMismatch(ValueError):
    """A setpoint or command is not valid in the current control mode."""


class EmptyBin(ValueError):
    """An aggregation was requested over a bin with no samples."""


class SchemaError(ValueError):
    """A configuration document failed validation.

    The message starts with the dotted path of the offending field
    (``mission.items[2].speed``) so callers can surface it directly.
    """
