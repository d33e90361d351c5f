"""
Service layer modules
"""

from cmcindex.services.continuation import BranchContinuation, LatticeFamily
from cmcindex.services.sinh_gordon import SinhGordonSolver
from cmcindex.services.spectrum import JacobiOperator

__all__ = ["BranchContinuation", "LatticeFamily", "SinhGordonSolver", "JacobiOperator"]
