"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and dimension problems
exit 1, numeric failures exit 2, degenerate-estimator warnings exit 3.
"""


class DimensionError(ValueError):
    """Operands live on different alphabets or atom counts."""


class ConfigError(ValueError):
    """A configuration document or parameter violates its schema."""


class ContractError(ValueError):
    """A stated precondition between inputs does not hold."""


class NumericError(RuntimeError):
    """An iterative solver failed to converge.

    Carries a ``diagnostics`` dict (iteration counts, residuals) so the
    failure can be reported rather than silently truncated.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DegenerateEstimatorError(RuntimeError):
    """An importance-sampling proposal puts zero mass where the event needs it."""


class InsufficientDataError(ValueError):
    """Too few finite data points for the requested fit."""
