"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, CheckFailure -> 1,
QuadratureError (non-convergence) -> 3.
"""


class LevygenError(Exception):
    pass


class DomainError(LevygenError, ValueError):
    """A parameter left its admissible range (the message names the constraint)."""


class ContractError(LevygenError, ValueError):
    """A structural precondition was violated (shapes, supports, missing data)."""


class ConfigError(LevygenError, ValueError):
    """Bad run configuration: malformed JSON, unknown keys, wrong types."""


class QuadratureError(LevygenError, ArithmeticError):
    """Quadrature failed to converge.

    Carries the partial value and a residual estimate so callers can report
    how far the computation got.
    """

    def __init__(self, message, partial=None, residual=None):
        super().__init__(message)
        self.partial = partial
        self.residual = residual


class CheckFailure(LevygenError, AssertionError):
    """A verification suite check did not pass."""
