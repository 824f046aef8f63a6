"""Errors raised by the effent package."""


class EffentError(Exception):
    """
    Base class for all errors raised by effent.
    """


class ValidationError(EffentError):
    """
    Raised when an input (state, channel, game, option or command line argument) is invalid.
    """


class DimensionError(ValidationError):
    """
    Raised when dimensions or subsystem indices of the inputs do not fit together.
    """


class NumericalError(EffentError):
    """
    Raised when a computation cannot deliver a result of the requested accuracy,
    e.g. a Fock truncation that loses norm or a verification that does not agree.
    """
