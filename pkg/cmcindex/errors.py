"""
Exception hierarchy

Every error carries the process exit code the CLI maps it to.
"""

from typing import Any, Optional


class CmcError(Exception):
    """Base error for the package"""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message, **self.details}


class ConfigError(CmcError):
    """Invalid or unreadable configuration"""

    exit_code = 2


class NumericalError(CmcError):
    """A numerical stage failed"""

    exit_code = 3


class AliasingError(NumericalError):
    """Too much energy in the top third of the Fourier spectrum"""


class NonConvergence(NumericalError):
    """Iteration did not reach tolerance, or converged less than quadratically"""


class DivergedToTrivial(NumericalError):
    """Newton from a nontrivial seed collapsed onto u = 0"""


class NoBifurcationDetected(NumericalError):
    """No bifurcation point from the flat solution along a lattice family"""


class StepFailure(NumericalError):
    """Continuation step kept failing after repeated step halving"""

    def __init__(self, message: str, last_good: Optional[Any] = None, **details: Any):
        super().__init__(message, **details)
        self.last_good = last_good


class NotEnoughEigenvalues(NumericalError):
    """The requested eigenvalues do not reach past zero"""


class EigenSolverFailure(NumericalError):
    """Iterative eigen-solver did not converge"""


class DegenerateField(NumericalError):
    """Field is numerically zero"""


class AmbiguousTopology(NumericalError):
    """Marching-squares saddle cells could not be resolved"""

    def __init__(self, message: str, cells: Optional[list] = None, **details: Any):
        super().__init__(message, cells=cells or [], **details)
        self.cells = cells or []


class GridMismatch(NumericalError):
    """Fields live on different grids or lattices"""


class FieldFormatError(NumericalError):
    """Malformed field file"""


class TooManyPoints(NumericalError):
    """More prescribed points than the fit can handle"""


class DuplicatePoints(NumericalError):
    """Prescribed points coincide modulo the lattice"""


class RecursionInconsistency(CmcError):
    """A symbolic identity of the hierarchy recursion failed"""

    exit_code = 3


class PropertyViolation(CmcError):
    """A checked property (Euler relation, Courant bound, ...) fails"""

    exit_code = 4
