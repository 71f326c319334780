"""Exception types shared across the package."""

from __future__ import annotations


class CRNError(Exception):
    """Base class for all crnlab errors."""


class DimensionError(CRNError):
    """A vector's length does not match the network's species count."""


class ContractError(CRNError):
    """An operation was called outside its stated precondition."""


class RefusalError(CRNError):
    """An operation refused to run because a structural precondition fails.

    Distinct from ContractError so callers (notably the CLI, exit code 4)
    can tell "you asked for something this network does not support" apart
    from plain misuse.
    """


class PropensityOverflowError(CRNError):
    """A jump rate left the double-precision range during simulation."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class ParseError(CRNError):
    """Model text rejected, with the offending location.

    line and column are 1-based and point at the start of ``token``.
    """

    def __init__(self, line: int, column: int, message: str, token: str = ""):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message
        self.token = token
