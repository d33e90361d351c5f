"""
Sinh-Gordon solver

Doubly periodic solutions of ∂_z∂_z̄u + sinh u = 0, written on the grid as
¼(u_xx + u_yy) + sinh u = 0. Provides Newton-Krylov iteration, the 1-D
shooting oracle and field file ingestion.
"""

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.sparse.linalg import LinearOperator, gmres

from cmcindex.config import SolveConfig, Symmetry
from cmcindex.errors import DivergedToTrivial, NonConvergence
from cmcindex.models import BranchTag, Grid, ScalarField, SinhGordonSolution, TorusLattice
from cmcindex.services import lattice as lat
from cmcindex.utils.fieldio import read_field, write_field
from cmcindex.utils.logger import get_context_logger, get_logger

logger = get_logger(__name__)

TRIVIAL_NORM = 1e-8
ENERGY_DRIFT_TOL = 1e-10
QUADRATIC_WINDOW = 1e-3


# ==================== Residual ====================

def residual_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    """¼Δ₀u + sinh u on raw arrays"""
    return -0.25 * lat.laplacian_values(values, grid) + np.sinh(values)


def residual(u: ScalarField) -> ScalarField:
    """F(u) = ¼(u_xx + u_yy) + sinh u"""
    return ScalarField(u.grid, residual_values(u.values, u.grid))


def residual_norm(u: ScalarField) -> float:
    return float(np.max(np.abs(residual_values(u.values, u.grid))))


def quadratic_constants(history: tuple[float, ...] | list[float]) -> list[float]:
    """r_{n+1}/r_n² for consecutive residuals inside the quadratic window"""
    return [
        nxt / prev ** 2
        for prev, nxt in zip(history, history[1:])
        if prev < QUADRATIC_WINDOW and nxt > 1e-12
    ]


# ==================== Seeds ====================

def seed_field(grid: Grid, kind: str = "cosine", amplitude: float = 0.5) -> ScalarField:
    """
    Newton seed on a grid

    Args:
        grid: target grid
        kind: "zero" or "cosine" (amplitude·(cos 2πs + cos 2πt) in logical coordinates)
        amplitude: seed amplitude
    """
    if kind == "zero":
        return ScalarField.zeros(grid)
    if kind == "cosine":
        s, t = grid.logical
        return ScalarField(grid, amplitude * (np.cos(2 * np.pi * s) + np.cos(2 * np.pi * t)))
    raise ValueError(f"Unknown seed kind {kind!r}")


# ==================== Newton-Krylov ====================

class SinhGordonSolver:
    """
    Newton iteration with a GMRES inner solve

    The Jacobian −¼Δ_Eucl + cosh u is preconditioned by its Fourier part with
    cosh u replaced by its mean. With symmetry=even the seed, right-hand side
    and Krylov iterates are projected onto even fields.
    """

    def __init__(self, cfg: Optional[SolveConfig] = None):
        self.cfg = cfg or SolveConfig()
        self.log = get_context_logger(__name__, stage="solve")

    @property
    def even(self) -> bool:
        return self.cfg.symmetry == Symmetry.EVEN

    def _project(self, values: np.ndarray) -> np.ndarray:
        return lat.even_part(values) if self.even else values

    def _newton_step(self, u: np.ndarray, f: np.ndarray, grid: Grid, rnorm: float) -> np.ndarray:
        """Solve J δ = −F approximately"""
        shape, n = grid.shape, grid.size
        potential = np.cosh(u)
        quarter_symbol = 0.25 * grid.xi_squared

        def jacobian(x: np.ndarray) -> np.ndarray:
            x = self._project(x.reshape(shape))
            out = -lat.apply_multiplier(x, quarter_symbol).real + potential * x
            return self._project(out).ravel()

        diagonal = -quarter_symbol + float(np.mean(potential))
        diagonal = np.where(np.abs(diagonal) < 0.25, np.copysign(0.25, diagonal), diagonal)
        inverse = 1.0 / diagonal

        def precondition(x: np.ndarray) -> np.ndarray:
            return lat.apply_multiplier(x.reshape(shape), inverse).real.ravel()

        delta, info = gmres(
            LinearOperator((n, n), matvec=jacobian, dtype=np.float64),
            self._project(-f).ravel(),
            M=LinearOperator((n, n), matvec=precondition, dtype=np.float64),
            rtol=min(1e-4, rnorm),
            atol=0.0,
            restart=self.cfg.gmres_restart,
            maxiter=self.cfg.gmres_maxiter,
        )
        if info < 0:
            raise NonConvergence(f"GMRES breakdown (info={info})", info=info)
        if info > 0:
            self.log.debug(f"GMRES stopped before tolerance after {info} iterations")
        return self._project(delta.reshape(shape))

    def _deflation_factor(self, u: np.ndarray, delta: np.ndarray) -> float:
        """Step multiplier τ for the residual deflated by M(u) = 1/mean(u²) + shift"""
        mean_sq = float(np.mean(u * u))
        if mean_sq == 0.0:
            return 1.0
        m = 1.0 / mean_sq + self.cfg.deflation_shift
        grad_m = -2.0 * float(np.mean(u * delta)) / mean_sq ** 2
        denominator = 1.0 - grad_m / m
        return 1.0 if abs(denominator) < 1e-12 else 1.0 / denominator

    def solve(self, seed: ScalarField, branch_tag: str = BranchTag.NEWTON) -> SinhGordonSolution:
        """
        Newton-Krylov solve from a seed

        Args:
            seed: initial field; its grid fixes lattice and resolution
            branch_tag: provenance recorded on a nontrivial result

        Returns:
            SinhGordonSolution with residual sup-norm ≤ newton_tol

        Raises:
            NonConvergence: max_iters reached or line search failed
            DivergedToTrivial: a nontrivial seed collapsed onto u ≡ 0
        """
        cfg, grid = self.cfg, seed.grid
        seed_norm = seed.sup_norm
        if seed_norm == 0.0:
            return SinhGordonSolution(u=ScalarField.zeros(grid), residual_norm=0.0, branch_tag=BranchTag.TRIVIAL)

        u = self._project(seed.values.copy())
        history: list[float] = []
        started = time.perf_counter()

        for iteration in range(cfg.max_iters + 1):
            f = residual_values(u, grid)
            rnorm = float(np.max(np.abs(f)))
            history.append(rnorm)
            self.log.debug(
                f"Newton iteration {iteration}: residual {rnorm:.3e}",
                extra={"iteration": iteration, "residual": rnorm},
            )
            if seed_norm >= TRIVIAL_NORM and np.max(np.abs(u)) < TRIVIAL_NORM:
                raise DivergedToTrivial(
                    f"Newton collapsed onto u = 0 from a seed of sup-norm {seed_norm:.3e}",
                    iteration=iteration,
                    history=history,
                )
            if rnorm <= cfg.newton_tol:
                break
            if iteration == cfg.max_iters:
                raise NonConvergence(
                    f"Newton did not reach {cfg.newton_tol:.1e} in {cfg.max_iters} iterations (residual {rnorm:.3e})",
                    residual=rnorm,
                    history=history,
                )

            delta = self._newton_step(u, f, grid, rnorm)
            if cfg.deflation:
                delta = delta * self._deflation_factor(u, delta)
            u = self._line_search(u, delta, grid, rnorm)

        solution = SinhGordonSolution(
            u=ScalarField(grid, u),
            residual_norm=history[-1],
            branch_tag=branch_tag,
            iterations=len(history) - 1,
            history=tuple(history),
        )
        self._report_convergence(solution, started)
        return solution

    def _line_search(self, u: np.ndarray, delta: np.ndarray, grid: Grid, rnorm: float) -> np.ndarray:
        step = 1.0
        while step >= 1.0 / 64:
            trial = u + step * delta
            if np.max(np.abs(residual_values(trial, grid))) < rnorm:
                return trial
            step *= 0.5
        raise NonConvergence(f"Line search failed at residual {rnorm:.3e}", residual=rnorm)

    def _report_convergence(self, solution: SinhGordonSolution, started: float) -> None:
        constants = quadratic_constants(solution.history)
        worst = max(constants, default=0.0)
        self.log.info(
            f"Newton converged in {solution.iterations} iterations, residual {solution.residual_norm:.3e}",
            extra={
                "residual": solution.residual_norm,
                "iteration": solution.iterations,
                "duration_ms": round((time.perf_counter() - started) * 1000, 1),
            },
        )
        if worst > self.cfg.quadratic_constant:
            self.log.warning(
                f"Newton convergence slower than quadratic: constant {worst:.2e} > {self.cfg.quadratic_constant}"
            )


def solve(seed: ScalarField, cfg: Optional[SolveConfig] = None) -> SinhGordonSolution:
    return SinhGordonSolver(cfg).solve(seed)


# ==================== 1-D shooting oracle ====================

@dataclass(frozen=True)
class Orbit:
    """Closed orbit of u'' = −4 sinh u at energy E = ½u'² + 4 cosh u"""

    energy: float
    amplitude: float
    period: float
    return_time: float
    drift: float
    profile: np.ndarray


def orbit_period(energy: float) -> float:
    """
    T(E) = 2∫ du/√(2E − 8 cosh u) over one traverse of the well

    Substituting u = a·sinθ with a = arccosh(E/4) removes the endpoint singularities.
    """
    if energy <= 4.0:
        raise ValueError(f"Closed orbits need E > 4, got {energy}")
    a = math.acosh(energy / 4.0)

    def integrand(theta: float) -> float:
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        # 1 − sinθ without cancellation
        one_minus = cos_t * cos_t / (1.0 + sin_t)
        radicand = 16.0 * math.sinh(0.5 * a * (1.0 + sin_t)) * math.sinh(0.5 * a * one_minus)
        return a * cos_t / math.sqrt(radicand)

    value, _ = quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-12, limit=200)
    return 4.0 * value


def shoot_1d(energy: float, samples: int) -> Orbit:
    """
    Integrate the orbit through u(0) = a, u'(0) = 0 and sample one period

    Raises:
        ValueError: E ≤ 4 or samples < 2
        NonConvergence: energy drift above 1e−10 or no return to the maximum
    """
    if samples < 2:
        raise ValueError(f"Need at least 2 samples, got {samples}")
    period = orbit_period(energy)
    a = math.acosh(energy / 4.0)

    def rhs(_t: float, y: np.ndarray) -> list[float]:
        return [y[1], -4.0 * math.sinh(y[0])]

    def at_maximum(_t: float, y: np.ndarray) -> float:
        return y[1]

    at_maximum.direction = -1

    sol = solve_ivp(
        rhs,
        (0.0, 1.1 * period),
        [a, 0.0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-13,
        dense_output=True,
        events=at_maximum,
    )
    if not sol.success:
        raise NonConvergence(f"Orbit integration failed: {sol.message}", energy=energy)

    returns = [t for t in sol.t_events[0] if t > period / 2]
    if not returns:
        raise NonConvergence("Orbit did not return to its maximum", energy=energy, period=period)

    u, du = sol.y
    drift = float(np.max(np.abs(0.5 * du ** 2 + 4.0 * np.cosh(u) - energy)))
    if drift > ENERGY_DRIFT_TOL:
        raise NonConvergence(f"Energy drift {drift:.2e} exceeds {ENERGY_DRIFT_TOL:.0e}", energy=energy, drift=drift)

    x = np.arange(samples) * period / samples
    profile = sol.sol(x)[0]
    logger.debug(
        f"Orbit E={energy}: T={period:.15g}, return {returns[0]:.15g}, drift {drift:.1e}",
        extra={"stage": "oned"},
    )
    return Orbit(energy=energy, amplitude=a, period=period, return_time=float(returns[0]), drift=drift, profile=profile)


def solve_1d(energy: float, samples: int) -> tuple[float, np.ndarray]:
    """(T(E), profile sampled at x_j = j·T/samples)"""
    orbit = shoot_1d(energy, samples)
    return orbit.period, orbit.profile


def oned_solution(
    energy: float,
    nx: int,
    ny: int,
    b: float = 1.0,
    m: int = 1,
    cfg: Optional[SolveConfig] = None,
    polish: bool = True,
) -> SinhGordonSolution:
    """
    y-independent solution on the rectangular lattice (T(E), b)

    Args:
        energy: orbit energy E > 4
        nx, ny: grid resolution
        b: y-period
        m: sublattice multiplicity recorded on the lattice
        cfg: Newton knobs for polishing (symmetry is forced even)
        polish: run Newton on the sampled profile

    Returns:
        SinhGordonSolution tagged "oned-shooting"
    """
    orbit = shoot_1d(energy, nx)
    grid = Grid(TorusLattice.rectangular(orbit.period, b, m), nx, ny)
    seed = ScalarField(grid, np.broadcast_to(orbit.profile, grid.shape))
    if not polish:
        return SinhGordonSolution(u=seed, residual_norm=residual_norm(seed), branch_tag=BranchTag.ONED)

    cfg = (cfg or SolveConfig()).model_copy(update={"symmetry": Symmetry.EVEN})
    return SinhGordonSolver(cfg).solve(seed, branch_tag=BranchTag.ONED)


# ==================== Files and tiling ====================

def load_field(path: str | Path, upsample: int = 1) -> SinhGordonSolution:
    """Read a CMCF field; the residual is recomputed, never read"""
    u = lat.upsample(read_field(path), upsample)
    solution = SinhGordonSolution(u=u, residual_norm=residual_norm(u), branch_tag=BranchTag.FILE)
    logger.info(f"Loaded field {path} with residual {solution.residual_norm:.3e}", extra={"stage": "solve"})
    return solution


def save_field(solution: SinhGordonSolution | ScalarField, path: str | Path) -> None:
    u = solution.u if isinstance(solution, SinhGordonSolution) else solution
    write_field(path, u)


def tile(solution: SinhGordonSolution, m: int) -> SinhGordonSolution:
    """Stack m copies of a solution on Λ̃ along ω2, giving the surface lattice Λ = ⟨ω1, m·ω2⟩"""
    if int(m) != m or m < 1:
        raise ValueError(f"Multiplicity must be a positive integer, got {m}")
    grid = solution.grid
    base = grid.lattice
    lattice = TorusLattice(base.omega1, base.omega2 * m, base.m * m)
    tiled = Grid(lattice, grid.nx, grid.ny * m)
    u = ScalarField(tiled, np.tile(solution.u.values, (m, 1)))
    return SinhGordonSolution(
        u=u,
        residual_norm=residual_norm(u),
        branch_tag=solution.branch_tag,
        iterations=solution.iterations,
        history=solution.history,
        parameter=solution.parameter,
    )
