"""Large-order Bessel machinery for two-parameter eigenfunction localization in balls and shells."""

__version__ = "0.1.0"

from .errors import (
    AccuracyLossError,
    BracketError,
    DomainError,
    EiglocError,
    InsufficientDataError,
    SolverIntegrityError,
)
from .geometry import DomainSpec, ModeIndex, nu_of_l
from .specfun import DEFAULT_POLICY, EvalPolicy, ScaledValue

__all__ = [
    "AccuracyLossError",
    "BracketError",
    "DomainError",
    "EiglocError",
    "InsufficientDataError",
    "SolverIntegrityError",
    "DomainSpec",
    "ModeIndex",
    "nu_of_l",
    "DEFAULT_POLICY",
    "EvalPolicy",
    "ScaledValue",
]
