"""Exception hierarchy shared by every module of the package."""


class DualDecompError(Exception):
    """Base class for all errors raised by ``dualdecomp``."""


class InvalidDimensionsError(DualDecompError, ValueError):
    pass


class InvalidProblemError(DualDecompError, ValueError):
    """Cost data violates symmetry or positive definiteness."""


class InvalidTopologyError(DualDecompError, ValueError):
    """Net memberships and cost dimensions of a general problem disagree."""


class ConstantUnavailableError(DualDecompError):
    """The requested constant is not asserted for this problem class.

    Raised for instance when the dual strong-convexity constant is asked
    for on a box-constrained problem.
    """


class UnsupportedSubproblemError(DualDecompError):
    pass


class DegenerateProblemError(DualDecompError):
    pass


class NoConvergenceError(DualDecompError):
    def __init__(self, message, last_grad_norm):
        super().__init__(message)
        self.last_grad_norm = last_grad_norm


class OutOfDomainError(DualDecompError, ValueError):
    pass


class InvalidStepRuleError(DualDecompError, ValueError):
    pass


class IncompatibleInputsError(DualDecompError, ValueError):
    pass


class ConfigError(DualDecompError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
