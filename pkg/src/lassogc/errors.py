"""Exception types shared across the package.

The CLI maps these onto exit codes: structural/input problems exit with 2,
numerical failures with 3.
"""


class StructuralError(ValueError):
    """Inconsistent shapes, orders, or channel indices."""


class InputError(ValueError):
    """Malformed external input (files, CSV cells, configuration)."""


class NumericalError(RuntimeError):
    """A numerical routine failed (eigen solver, linear solve, divergence)."""


class UnstableModelError(ValueError):
    """An operation that requires a stable process received an unstable model."""


class InfeasibleThresholdError(ValueError):
    """No positive threshold can achieve the requested false-positive level.

    Attributes
    ----------
    min_n : int
        Smallest sample size at which the requested level becomes feasible.
    """

    def __init__(self, message, min_n):
        super().__init__(message)
        self.min_n = min_n
