"""
Jacobi operator spectrum

L = −∂_z∂_z̄ − cosh u = ¼Δ_Eucl − cosh u on C/Λ, discretized as the Fourier
multiplier ¼|ξ|² plus pointwise multiplication by −cosh u. Eigenvalues are taken
with respect to the plain dxdy inner product.
"""

import time
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh, lobpcg

from cmcindex.errors import EigenSolverFailure, NotEnoughEigenvalues
from cmcindex.models import Grid, ScalarField, SpectrumReport, TorusLattice
from cmcindex.services import lattice as lat
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)

DENSE_MAX = 4096
KERNEL_TOL = 1e-5
DENSE_CHUNK = 512


class JacobiOperator:
    """
    The Jacobi operator of a sinh-Gordon solution u

    Args:
        u: solution field; its grid fixes the discretization
        discretization: "dense" or "matrix_free"; chosen from the grid size when omitted
        dense_max: largest number of unknowns solved densely
    """

    def __init__(
        self,
        u: ScalarField,
        discretization: Optional[Literal["dense", "matrix_free"]] = None,
        dense_max: int = DENSE_MAX
    ):
        self.u = u
        self.grid: Grid = u.grid
        self.potential = np.cosh(u.values)
        self.symbol = 0.25 * self.grid.xi_squared
        if discretization is None:
            discretization = "dense" if self.grid.size <= dense_max else "matrix_free"
        if discretization not in ("dense", "matrix_free"):
            raise ValueError(f"Unknown discretization {discretization!r}")
        self.discretization = discretization

    @property
    def lattice(self) -> TorusLattice:
        return self.grid.lattice

    @property
    def size(self) -> int:
        return self.grid.size

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        """L on raw arrays of shape (..., ny, nx)"""
        return lat.apply_multiplier(values, self.symbol).real - self.potential * values

    def apply(self, v: ScalarField) -> ScalarField:
        lat.same_grid(v, self.u)
        return ScalarField(self.grid, self.apply_values(v.values))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.apply_values(np.asarray(x, dtype=float).reshape(self.grid.shape)).ravel()

    def matmat(self, block: np.ndarray) -> np.ndarray:
        block = np.asarray(block, dtype=float)
        stack = block.T.reshape((block.shape[1],) + self.grid.shape)
        return self.apply_values(stack).reshape(block.shape[1], self.size).T

    def linear_operator(self) -> LinearOperator:
        return LinearOperator(
            (self.size, self.size),
            matvec=self.matvec,
            matmat=self.matmat,
            dtype=np.float64,
        )

    def preconditioner(self) -> LinearOperator:
        """Inverse of the SPD Fourier part ¼|ξ|² + 1"""
        inverse = 1.0 / (self.symbol + 1.0)

        def solve(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            if x.ndim == 1:
                return lat.apply_multiplier(x.reshape(self.grid.shape), inverse).real.ravel()
            stack = x.T.reshape((x.shape[1],) + self.grid.shape)
            return lat.apply_multiplier(stack, inverse).real.reshape(x.shape[1], self.size).T

        return LinearOperator((self.size, self.size), matvec=solve, matmat=solve, dtype=np.float64)

    def dense_matrix(self) -> np.ndarray:
        """Assemble L column by column, symmetrized to remove FFT round-off"""
        n = self.size
        matrix = np.empty((n, n))
        for start in range(0, n, DENSE_CHUNK):
            stop = min(start + DENSE_CHUNK, n)
            basis = np.zeros((stop - start, n))
            basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
            columns = self.apply_values(basis.reshape((stop - start,) + self.grid.shape))
            matrix[:, start:stop] = columns.reshape(stop - start, n).T
        return 0.5 * (matrix + matrix.T)

    def symmetry_defect(self, pairs: int = 5, seed: int = 0) -> float:
        """max |⟨Lφ,ψ⟩ − ⟨φ,Lψ⟩| relative to ‖φ‖‖Lψ‖ + ‖Lφ‖‖ψ‖ over random pairs"""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(pairs):
            phi = ScalarField(self.grid, rng.standard_normal(self.grid.shape))
            psi = ScalarField(self.grid, rng.standard_normal(self.grid.shape))
            l_phi, l_psi = self.apply(phi), self.apply(psi)
            scale = lat.l2_norm(phi) * lat.l2_norm(l_psi) + lat.l2_norm(l_phi) * lat.l2_norm(psi)
            worst = max(worst, abs(lat.inner(l_phi, psi) - lat.inner(phi, l_psi)) / scale)
        return worst


def default_zero_tol(op: JacobiOperator, kernel_tol: float = KERNEL_TOL) -> float:
    """max(1e−8, 10·kernel_tol·‖cosh u‖∞)"""
    return max(1e-8, 10.0 * kernel_tol * float(np.max(op.potential)))


def _sign_fixed(vector: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(vector))
    if scale == 0.0:
        return vector
    first = vector[np.flatnonzero(np.abs(vector) > 1e-8 * scale)[0]]
    return -vector if first < 0 else vector


# ==================== Eigen-solves ====================

def _dense_eigs(op: JacobiOperator, count: int) -> tuple[np.ndarray, np.ndarray]:
    return linalg.eigh(op.dense_matrix(), subset_by_index=[0, count - 1])


def _lanczos_eigs(op: JacobiOperator, count: int, eig_tol: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if count >= op.size:
        raise NotEnoughEigenvalues(f"Lanczos needs count < {op.size}, got {count}", count=count)
    v0 = np.random.default_rng(seed).standard_normal(op.size)
    try:
        return eigsh(op.linear_operator(), k=count, which="SA", v0=v0, tol=eig_tol)
    except (ArpackNoConvergence, ArpackError) as e:
        raise EigenSolverFailure(f"Lanczos iteration failed: {e}", count=count) from e


def _lobpcg_eigs(op: JacobiOperator, count: int, eig_tol: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    start = np.random.default_rng(seed).standard_normal((op.size, count))
    values, vectors = lobpcg(
        op.linear_operator(),
        start,
        M=op.preconditioner(),
        largest=False,
        tol=max(eig_tol, 1e-10),
        maxiter=2000,
    )
    residuals = np.linalg.norm(op.matmat(vectors) - vectors * values, axis=0)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(residuals) > 1e-6 * scale:
        raise EigenSolverFailure(
            f"LOBPCG residual {np.max(residuals):.2e} above tolerance",
            count=count,
            residual=float(np.max(residuals)),
        )
    return values, vectors


def eigen(
    op: JacobiOperator,
    count: int = 16,
    zero_tol: Optional[float] = None,
    kernel_tol: float = KERNEL_TOL,
    solver: Literal["lanczos", "lobpcg"] = "lanczos",
    eig_tol: float = 1e-12,
    seed: int = 0,
    kernel_fields: Optional[Sequence[ScalarField]] = None,
    gram_tol: float = 1e-8,
) -> SpectrumReport:
    """
    Low spectrum of L and the index interval [𝒦−1, 𝒦]

    Args:
        op: Jacobi operator
        count: number of eigenvalues n
        zero_tol: kernel tolerance; max(1e−8, 10·kernel_tol·‖cosh u‖∞) when omitted
        kernel_tol: relative kernel residual used for the default zero_tol
        solver: iterative method for matrix-free operators
        eig_tol: iterative solver tolerance
        seed: start-vector seed of the iterative solvers
        kernel_fields: known kernel elements (e.g. v_j); their Gram rank is recorded
        gram_tol: relative singular-value cutoff for the Gram rank

    Returns:
        SpectrumReport with L²(dxdy)-orthonormal, sign-fixed eigenfields

    Raises:
        NotEnoughEigenvalues: λ_n < zero_tol or count exceeds the grid size
        EigenSolverFailure: the iterative solver did not converge
    """
    if count < 1 or count > op.size:
        raise NotEnoughEigenvalues(f"Cannot compute {count} eigenvalues on {op.size} unknowns", count=count)
    if zero_tol is None:
        zero_tol = default_zero_tol(op, kernel_tol)

    started = time.perf_counter()
    if op.discretization == "dense":
        values, vectors = _dense_eigs(op, count)
    elif solver == "lobpcg":
        values, vectors = _lobpcg_eigs(op, count, eig_tol, seed)
    else:
        values, vectors = _lanczos_eigs(op, count, eig_tol, seed)

    order = np.argsort(values)
    values = np.asarray(values)[order]
    vectors = np.asarray(vectors)[:, order]
    duration_ms = (time.perf_counter() - started) * 1000
    logger.info(
        f"Computed {count} eigenvalues ({op.discretization}), lowest {values[0]:.6f}",
        extra={"stage": "spectrum", "duration_ms": round(duration_ms, 1), "grid": f"{op.grid.nx}x{op.grid.ny}"},
    )

    if values[-1] < zero_tol:
        raise NotEnoughEigenvalues(
            f"Largest computed eigenvalue {values[-1]:.3e} is still below zero_tol {zero_tol:.1e}",
            count=count,
            largest=float(values[-1]),
        )

    norm = np.sqrt(op.grid.cell_area)
    fields = [ScalarField(op.grid, _sign_fixed(vectors[:, i]).reshape(op.grid.shape) / norm) for i in range(count)]

    neg_count = int(np.sum(values < -zero_tol))
    zero_mult = int(np.sum(np.abs(values) <= zero_tol))
    witness = gram_rank(kernel_fields, gram_tol) if kernel_fields else None

    return SpectrumReport(
        eigenvalues=[float(v) for v in values],
        neg_count=neg_count,
        zero_mult=zero_mult,
        zero_tol=zero_tol,
        index_lower=neg_count - 1,
        index_upper=neg_count,
        ground_state_simple=bool(count < 2 or values[1] - values[0] > zero_tol),
        kernel_flag=zero_mult >= 1,
        kernel_witness_rank=witness,
        discretization=op.discretization,
        eigenfields=fields,
    )


def resolve_spectrum(op: JacobiOperator, count: int = 16, **kwargs) -> SpectrumReport:
    """eigen(), doubling count until λ_n ≥ zero_tol"""
    while True:
        try:
            return eigen(op, count, **kwargs)
        except NotEnoughEigenvalues:
            if count >= op.size:
                raise
            count = min(2 * count, op.size)
            logger.info(f"Spectrum does not reach past zero, retrying with count={count}", extra={"stage": "spectrum"})


# ==================== Variational quantities ====================

def rayleigh_quotient(phi: ScalarField, op: JacobiOperator) -> float:
    """∫φLφ dxdy / ∫φ² dxdy"""
    return lat.inner(phi, op.apply(phi)) / lat.inner(phi, phi)


def second_variation(v: ScalarField, op: JacobiOperator) -> float:
    """4∫ vLv dxdy"""
    return 4.0 * lat.inner(v, op.apply(v))


def gauss_curvature(u: ScalarField, curvature: Literal["metric", "equation"] = "metric") -> np.ndarray:
    """
    K of e^u·ds²_Eucl

    "metric" uses K = −½e^{−u}(u_xx + u_yy); "equation" substitutes the
    sinh-Gordon equation, K = 1 − e^{−2u}.
    """
    if curvature == "metric":
        return 0.5 * np.exp(-u.values) * lat.laplacian_values(u.values, u.grid)
    if curvature == "equation":
        return 1.0 - np.exp(-2.0 * u.values)
    raise ValueError(f"Unknown curvature form {curvature!r}")


def intrinsic_second_variation(
    v: ScalarField,
    u: ScalarField,
    curvature: Literal["metric", "equation"] = "metric"
) -> float:
    """∫ {|∇v|² − (4H² − 2K)v²} dA with H = 1 and dA = e^u dxdy"""
    lat.same_grid(v, u)
    vx, vy = lat.gradient(v, check=False)
    k = gauss_curvature(u, curvature)
    # |∇v|² dA is conformally invariant
    integrand = vx.values ** 2 + vy.values ** 2 - (4.0 - 2.0 * k) * v.values ** 2 * np.exp(u.values)
    return lat.integrate(ScalarField(v.grid, integrand))


def volume_functional(v: ScalarField, u: ScalarField) -> float:
    """∫ v e^u dxdy"""
    lat.same_grid(v, u)
    return lat.integrate(ScalarField(v.grid, v.values * np.exp(u.values)))


def gram_rank(fields: Sequence[ScalarField], tol: float = 1e-8) -> int:
    """Number of Gram-matrix singular values above tol·(largest)"""
    if not fields:
        raise ValueError("gram_rank needs at least one field")
    lat.same_grid(*fields)
    gram = np.array([[lat.inner(a, b) for b in fields] for a in fields])
    singular = linalg.svd(gram, compute_uv=False)
    if singular[0] == 0.0:
        return 0
    return int(np.sum(singular > tol * singular[0]))


def flat_spectrum_oracle(lattice: TorusLattice, count: int) -> np.ndarray:
    """Lowest count values of ¼|ξ|² − 1 over the dual lattice (u ≡ 0)"""
    jac = lattice.jacobian
    b = np.linalg.inv(jac).T
    sigma_max = np.linalg.norm(jac, 2)
    radius = 4
    while True:
        p, q = np.meshgrid(np.arange(-radius, radius + 1), np.arange(-radius, radius + 1))
        xi_x = 2 * np.pi * (b[0, 0] * p + b[0, 1] * q)
        xi_y = 2 * np.pi * (b[1, 0] * p + b[1, 1] * q)
        values = np.sort((0.25 * (xi_x ** 2 + xi_y ** 2) - 1.0).ravel())
        # modes outside the box have |ξ| ≥ 2π(radius+1)/σ_max(J)
        outside = 0.25 * (2 * np.pi * (radius + 1) / sigma_max) ** 2 - 1.0
        if values.size >= count and values[count - 1] <= outside:
            return values[:count]
        radius *= 2
