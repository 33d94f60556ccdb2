"""Exception types shared across the package."""


class OblmpError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(OblmpError):
    """Operands live in spaces of different dimension."""


class DependentAtomError(OblmpError):
    """A candidate atom is numerically dependent on the already selected ones."""


class SingularGramError(OblmpError):
    """The Gram matrix of the selected atoms is numerically singular.

    Carries the condition-number estimate that triggered the failure.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition
