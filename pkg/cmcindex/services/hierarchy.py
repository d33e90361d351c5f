"""
Jacobi-field hierarchy

Exact R_j, K_j recursion over 2x2 matrices of differential polynomials, the
scalar functions ρ_j (K_j = ρ_j σ1 for even j) and their evaluation on a
solution u as the Jacobi fields v_j.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from cmcindex.algebra import I, SIGMA1, SIGMA2, SIGMA3, DiffPoly, GaussianRational, MatPoly, format_poly
from cmcindex.errors import RecursionInconsistency
from cmcindex.models import ComplexField, ScalarField, TorusLattice
from cmcindex.services import lattice as lat
from cmcindex.services.spectrum import JacobiOperator
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_JMAX = 12

_INV_NEG_2I = GaussianRational.of(1) / (I * -2)
_INV_2I = GaussianRational.of(1) / (I * 2)


@dataclass(frozen=True)
class Hierarchy:
    """R_1..R_jmax, K_1..K_jmax (index 0 unused) and ρ_j for even j"""

    jmax: int
    R: tuple[MatPoly, ...]
    K: tuple[MatPoly, ...]
    rho: dict[int, DiffPoly]


def _next_r(R: list[MatPoly], k: int, u_z: DiffPoly) -> MatPoly:
    """Solve i[R_{k+1}, σ3] = −u_z Σ_{n=1}^{k−1} R_n σ1 R_{k−n} − 2∂_z R_k for off-diagonal R_{k+1}"""
    total = MatPoly()
    for n in range(1, k):
        total = total + R[n] * SIGMA1 * R[k - n]
    rhs = -(total * u_z) - R[k].derivative() * 2

    if not rhs.is_off_diagonal():
        raise RecursionInconsistency(
            f"Right-hand side for R_{k + 1} has a nonzero diagonal",
            j=k + 1,
            diagonal=[format_poly(rhs.a11), format_poly(rhs.a22)],
        )
    # i[M, σ3] has entries (−2i·M12, +2i·M21) for off-diagonal M
    return MatPoly(a12=rhs.a12 * _INV_NEG_2I, a21=rhs.a21 * _INV_2I)


@lru_cache(maxsize=None)
def recursion(jmax: int = DEFAULT_JMAX) -> Hierarchy:
    """
    Run the R_j, K_j recursion in exact arithmetic

    Args:
        jmax: highest index, ≥ 2

    Returns:
        Hierarchy with R_j, K_j for j ≤ jmax and ρ_j for even j ≤ jmax

    Raises:
        RecursionInconsistency: a structural identity failed (implementation bug)
    """
    if jmax < 2:
        raise ValueError(f"jmax must be >= 2, got {jmax}")

    u_z = DiffPoly.var(1)
    u_zz = DiffPoly.var(2)

    R: list[MatPoly] = [MatPoly(), SIGMA2 * (u_z * Fraction(-1, 2)), SIGMA1 * (u_zz * Fraction(1, 2))]
    for k in range(2, jmax):
        R.append(_next_r(R, k, u_z))

    K: list[MatPoly] = [MatPoly(), SIGMA3 * (-I), SIGMA1 * (-u_z)]
    for j in range(2, jmax):
        acc = (R[j].commutator(SIGMA3)) * (-I)
        for i in range(2, j + 1):
            acc = acc - K[i] * R[j + 1 - i]
        K.append(acc)

    rho: dict[int, DiffPoly] = {}
    for j in range(2, jmax + 1, 2):
        kj = K[j]
        if not kj.is_off_diagonal() or kj.a12 != kj.a21:
            raise RecursionInconsistency(f"K_{j} is not a multiple of sigma1", j=j, matrix=repr(kj))
        weights = kj.a12.weights()
        if weights and weights != {j - 1}:
            raise RecursionInconsistency(f"rho_{j} has weights {sorted(weights)}, expected {j - 1}", j=j)
        rho[j] = kj.a12

    logger.debug(f"Hierarchy recursion done up to j={jmax}", extra={"stage": "hierarchy"})
    return Hierarchy(jmax=jmax, R=tuple(R), K=tuple(K), rho=rho)


def rho(j: int, jmax: Optional[int] = None) -> DiffPoly:
    """ρ_j for even j"""
    if j < 2 or j % 2:
        raise ValueError(f"rho_j is defined for even j >= 2, got {j}")
    return recursion(max(j, jmax or DEFAULT_JMAX)).rho[j]


def format_rho(j: int, poly: DiffPoly) -> str:
    """Canonical dump line, e.g. "rho4 = -1/2*(Dz^1 u)^3 + (Dz^3 u)" """
    return f"rho{j} = {format_poly(poly)}"


def dump(jmax: int = DEFAULT_JMAX) -> list[str]:
    h = recursion(jmax)
    return [format_rho(j, p) for j, p in sorted(h.rho.items())]


# ==================== Evaluation ====================

def evaluate(poly: DiffPoly, u: ScalarField, threshold: float = lat.ALIASING_THRESHOLD) -> ComplexField:
    """
    Substitute the spectral derivatives ∂_z^k u of a sampled solution

    Raises:
        AliasingError: u under-resolved on its grid
    """
    lat.check_resolved(u, threshold)
    orders = {k for factors in poly.terms for k in factors}
    derivatives = {k: lat.dz(u, k, check=False).values for k in orders}
    if not derivatives:
        values = np.full(u.grid.shape, complex(poly.terms.get((), 0)), dtype=complex)
        return ComplexField(u.grid, values)
    return ComplexField(u.grid, poly.evaluate(derivatives))


def jacobi_poly_index(j: int) -> int:
    """Even index of the ρ that defines v_j"""
    if j < 1:
        raise ValueError(f"Jacobi field index must be positive, got {j}")
    return j + 1 if j % 2 else j


def jacobi_field(j: int, u: ScalarField, threshold: float = lat.ALIASING_THRESHOLD) -> ScalarField:
    """v_j = Re ρ_{j+1} for odd j, Im ρ_j for even j"""
    values = evaluate(rho(jacobi_poly_index(j)), u, threshold)
    return values.real if j % 2 else values.imag


def jacobi_fields(count: int, u: ScalarField, threshold: float = lat.ALIASING_THRESHOLD) -> list[ScalarField]:
    return [jacobi_field(j, u, threshold) for j in range(1, count + 1)]


def kernel_residual(v: ScalarField, u: ScalarField) -> float:
    """‖L v‖₂ / ‖v‖₂ (0 for a vanishing field)"""
    op = JacobiOperator(u)
    norm = lat.l2_norm(v)
    if norm == 0.0:
        return 0.0
    return lat.l2_norm(op.apply(v)) / norm


def antisymmetry_defect(v: ScalarField, lattice: Optional[TorusLattice] = None) -> dict[str, float]:
    """
    max |v(w+z) + v(w−z)| / ‖v‖∞ at each half period w

    Returns:
        Mapping "w0".."w3" to the relative defect
    """
    lattice = lattice or v.grid.lattice
    scale = v.sup_norm or 1.0
    defects = {}
    for n, w in enumerate(lat.half_periods(lattice)):
        around = lat.translate(v, w)
        defect = np.max(np.abs(around.values + lat.reflect(around).values)) / scale
        defects[f"w{n}"] = float(defect)
    return defects
