"""Exception types shared by the numerical modules."""


class EiglocError(Exception):
    """Base class for all errors raised by eigloc."""


class DomainError(EiglocError, ValueError):
    """An argument lies outside the domain of the requested function."""


class AccuracyLossError(EiglocError, ArithmeticError):
    """The requested accuracy cannot be reached.

    ``achieved`` carries the best available estimate of the relative error.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(f"{message} (achieved ~{achieved:.3g})")
        self.achieved = achieved


class BracketError(EiglocError, RuntimeError):
    """A root bracket could not be established within the expansion budget."""


class SolverIntegrityError(EiglocError, RuntimeError):
    """An ODE or root solve produced a result violating a known bound."""


class InsufficientDataError(EiglocError, ValueError):
    """Too few samples were supplied for a fit."""
