"""Exception types shared across the package.

Each maps to a distinct CLI exit code (see cli.py): invalid input data or
arguments, instances too large for exact enumeration, parameter combinations
outside a formula's stated domain, and wire-protocol failures.
"""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class TooLargeError(ValueError):
    """Instance exceeds the exact-enumeration cap; use Monte Carlo instead."""


class DomainError(ValueError):
    """Parameters fall outside the stated domain of a closed-form bound."""


class BridgeError(RuntimeError):
    """External classifier bridge failed (transport, handshake, or protocol)."""


class UndefinedCorrelationError(ValueError):
    """Rank correlation is undefined (constant input on either side)."""


class UndefinedAUCError(ValueError):
    """AUC is undefined (only one class present in the edge universe)."""
