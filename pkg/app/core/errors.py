"""Exception hierarchy shared by every service."""

from typing import Any, List, Optional


class WeightForgeError(Exception):
    """Root of all toolkit errors."""


class DimensionMismatchError(WeightForgeError, ValueError):
    """Raised when a vector or matrix does not match the atoms of its space."""


class InvalidSpaceError(WeightForgeError, ValueError):
    """Raised for malformed measures, weights, exponents or power spaces."""


class OutsideDualBallError(WeightForgeError, ValueError):
    """Raised when a functional is not in the dual ball it is required to live in."""


class LinearProgramError(WeightForgeError):
    """Raised when the simplex solver is called with an inconsistent program."""


class InfeasibleProgramError(LinearProgramError):
    "Raised when the linear program has no feasible point."


class UnboundedProgramError(LinearProgramError):
    "Raised when the linear program objective is unbounded."


class SynthesisInfeasibleError(WeightForgeError):
    """Raised when a pipeline step proves the requested constant is too small.

    The violating family is attached so callers can report it.
    """

    def __init__(self, message: str, witness: Optional[List[Any]] = None, ratio: Optional[float] = None):
        super().__init__(message)
        self.witness = witness or []
        self.ratio = ratio


class ProblemFileError(WeightForgeError, ValueError):
    """Raised when a problem file is invalid or misses what a command needs."""


class InvalidParameterError(WeightForgeError, ValueError):
    """Raised for out-of-range numeric parameters such as a non-positive constant."""


class SynthesisUnknownError(WeightForgeError):
    """Raised when a pipeline step can neither certify nor refute its constant."""
