"""Exception hierarchy shared by every module of the package."""

import numpy as np


class FuncMCMCError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(FuncMCMCError, ValueError):
    pass


class NotPositiveDefinite(FuncMCMCError, np.linalg.LinAlgError):
    pass


class NonFiniteState(FuncMCMCError, FloatingPointError):
    """Raised when a sampler produces a non-finite state.

    ``iteration`` is the index of the offending update (``None`` when raised
    from a single step), ``last_state`` the last finite parameter vector.
    """

    def __init__(self, message, iteration=None, last_state=None):
        super().__init__(message)
        self.iteration = iteration
        self.last_state = last_state


class NonFiniteLoss(FuncMCMCError, FloatingPointError):
    pass


class ParseError(FuncMCMCError, ValueError):
    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class DegenerateColumn(FuncMCMCError, ValueError):
    pass


class PolicyError(FuncMCMCError, ValueError):
    pass


class EmptySampleSet(FuncMCMCError, ValueError):
    pass


class SchemaMismatch(FuncMCMCError, ValueError):
    pass


class ConfigError(FuncMCMCError, ValueError):
    pass
