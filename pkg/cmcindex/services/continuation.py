"""
Branch continuation from the flat solution

Along a lattice family t ↦ Λ(t) the linearization ¼Δ₀ + 1 at u ≡ 0 is singular
exactly when a dual-lattice mode has |ξ|² = 4. Nontrivial solutions bifurcate
there; they are followed by pseudo-arclength continuation in (u, t).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, gmres

from cmcindex.config import SolveConfig
from cmcindex.errors import NoBifurcationDetected, NonConvergence, StepFailure
from cmcindex.models import BranchTag, Grid, ScalarField, SinhGordonSolution, TorusLattice
from cmcindex.services import lattice as lat
from cmcindex.utils.logger import get_context_logger

EXACT_HIT = 4e-12
SCAN_SAMPLES = 401


@dataclass(frozen=True)
class LatticeFamily:
    """Straight-line family between two lattices with the same multiplicity"""

    start: TorusLattice
    end: TorusLattice

    def __post_init__(self):
        if self.start.m != self.end.m:
            raise ValueError(f"Family end points have different multiplicities {self.start.m} and {self.end.m}")

    def at(self, t: float) -> TorusLattice:
        w1 = self.start.omega1 + t * (self.end.omega1 - self.start.omega1)
        w2 = self.start.omega2 + t * (self.end.omega2 - self.start.omega2)
        return TorusLattice(w1, w2, self.start.m)

    @property
    def jacobian_rate(self) -> np.ndarray:
        """dJ/dt"""
        return self.end.jacobian - self.start.jacobian

    def xi_squared_rate(self, t: float, grid: Grid) -> np.ndarray:
        """∂_t|ξ|² = −2 ξᵀ B J'ᵀ ξ with B = J^{-T}"""
        g = grid.with_lattice(self.at(t))
        xi_x, xi_y = g.wavevectors
        b = np.linalg.inv(g.lattice.jacobian).T
        m = b @ self.jacobian_rate.T
        return -2.0 * (xi_x * (m[0, 0] * xi_x + m[0, 1] * xi_y) + xi_y * (m[1, 0] * xi_x + m[1, 1] * xi_y))


@dataclass(frozen=True)
class Bifurcation:
    """Parameter t* where the flat linearization is singular, with the critical modes (p, q)"""

    t: float
    modes: tuple[tuple[int, int], ...]


def _mode_xi_squared(lattice: TorusLattice, p: int, q: int) -> float:
    b = np.linalg.inv(lattice.jacobian).T
    xi = 2 * np.pi * (b @ np.array([p, q], dtype=float))
    return float(xi @ xi)


def detect_bifurcations(family: LatticeFamily, grid: Grid, samples: int = SCAN_SAMPLES) -> list[Bifurcation]:
    """
    Scan the family for resolvable modes crossing |ξ|² = 4

    Args:
        family: lattice family over t ∈ [0, 1]
        grid: resolution; modes with |p| ≥ nx/3 or |q| ≥ ny/3 are ignored
        samples: scan points

    Returns:
        Bifurcations sorted by t
    """
    ts = np.linspace(0.0, 1.0, samples)
    bound = math.ceil(max(np.linalg.norm(family.at(t).jacobian, 2) for t in (0.0, 1.0)) / math.pi) + 1

    hits: list[tuple[float, tuple[int, int]]] = []
    for p in range(0, bound + 1):
        for q in range(-bound, bound + 1):
            if not (p > 0 or q > 0):
                continue
            if abs(p) >= grid.nx / 3 or abs(q) >= grid.ny / 3:
                continue

            def gap(t: float) -> float:
                return _mode_xi_squared(family.at(t), p, q) - 4.0

            values = np.array([gap(t) for t in ts])
            in_run = False
            for i, value in enumerate(values):
                if abs(value) <= EXACT_HIT:
                    if not in_run:
                        hits.append((float(ts[i]), (p, q)))
                    in_run = True
                    continue
                in_run = False
                if i and abs(values[i - 1]) > EXACT_HIT and values[i - 1] * value < 0:
                    hits.append((float(brentq(gap, ts[i - 1], ts[i], xtol=1e-14)), (p, q)))

    hits.sort()
    out: list[Bifurcation] = []
    for t, mode in hits:
        if out and abs(out[-1].t - t) <= 1e-9:
            out[-1] = Bifurcation(out[-1].t, out[-1].modes + (mode,))
        else:
            out.append(Bifurcation(t, (mode,)))
    return out


class _CorrectorFailure(Exception):
    pass


class BranchContinuation:
    """
    Pseudo-arclength continuation of the branch bifurcating from u ≡ 0

    Unknowns are (u, t) with inner product mean(a·b) + t·t. All iterates are
    projected onto even fields.
    """

    def __init__(self, family: LatticeFamily, grid: Grid, cfg: Optional[SolveConfig] = None):
        self.family = family
        self.grid = grid
        self.cfg = cfg or SolveConfig()
        self.log = get_context_logger(__name__, stage="continuation")

    # ---------- residual and linearization ----------

    def _grid(self, t: float) -> Grid:
        return self.grid.with_lattice(self.family.at(t))

    def residual(self, u: np.ndarray, t: float) -> np.ndarray:
        return -0.25 * lat.laplacian_values(u, self._grid(t)) + np.sinh(u)

    def _bordered_step(
        self,
        u: np.ndarray,
        t: float,
        f: np.ndarray,
        row_u: np.ndarray,
        row_t: float,
        g: float,
        rnorm: float,
    ) -> tuple[np.ndarray, float]:
        """Solve [F_u F_t; row] (δu, δt) = −(F, g)"""
        grid = self._grid(t)
        shape, n = grid.shape, grid.size
        quarter_symbol = 0.25 * grid.xi_squared
        potential = np.cosh(u)
        f_t = -0.25 * lat.apply_multiplier(u, self.family.xi_squared_rate(t, self.grid)).real

        def matvec(z: np.ndarray) -> np.ndarray:
            du = lat.even_part(z[:n].reshape(shape))
            dt = z[n]
            out_u = -lat.apply_multiplier(du, quarter_symbol).real + potential * du + f_t * dt
            out_t = float(np.mean(row_u * du)) + row_t * dt
            return np.concatenate([lat.even_part(out_u).ravel(), [out_t]])

        diagonal = -quarter_symbol + float(np.mean(potential))
        diagonal = np.where(np.abs(diagonal) < 0.25, np.copysign(0.25, diagonal), diagonal)
        inverse = 1.0 / diagonal

        def precondition(z: np.ndarray) -> np.ndarray:
            du = lat.apply_multiplier(z[:n].reshape(shape), inverse).real.ravel()
            return np.concatenate([du, [z[n]]])

        rhs = np.concatenate([-lat.even_part(f).ravel(), [-g]])
        z, info = gmres(
            LinearOperator((n + 1, n + 1), matvec=matvec, dtype=np.float64),
            rhs,
            M=LinearOperator((n + 1, n + 1), matvec=precondition, dtype=np.float64),
            rtol=min(1e-4, max(rnorm, 1e-14)),
            atol=0.0,
            restart=self.cfg.gmres_restart,
            maxiter=self.cfg.gmres_maxiter,
        )
        if info < 0:
            raise NonConvergence(f"Bordered GMRES breakdown (info={info})", info=info)
        return lat.even_part(z[:n].reshape(shape)), float(z[n])

    def _correct(self, u: np.ndarray, t: float, row_u: np.ndarray, row_t: float, target: float) -> tuple[np.ndarray, float, float, int]:
        """Newton on F(u, t) = 0, mean(row_u·u) + row_t·t = target"""
        u = lat.even_part(u)
        first = None
        for iteration in range(self.cfg.max_iters + 1):
            f = self.residual(u, t)
            rnorm = float(np.max(np.abs(f)))
            g = float(np.mean(row_u * u)) + row_t * t - target
            if not math.isfinite(rnorm) or (first is not None and rnorm > 1e3 * max(first, 1e-8)):
                raise _CorrectorFailure(f"corrector diverged (residual {rnorm:.3e})")
            first = rnorm if first is None else first
            self.log.debug(f"Corrector iteration {iteration}: residual {rnorm:.3e}", extra={"iteration": iteration, "residual": rnorm})
            if rnorm <= self.cfg.newton_tol and abs(g) <= max(self.cfg.newton_tol, 1e-12):
                return u, t, rnorm, iteration
            if iteration == self.cfg.max_iters:
                break
            du, dt = self._bordered_step(u, t, f, row_u, row_t, g, rnorm)
            u, t = u + du, t + dt
        raise _CorrectorFailure(f"corrector stalled at residual {rnorm:.3e}")

    def _solution(self, u: np.ndarray, t: float, rnorm: float, iterations: int) -> SinhGordonSolution:
        return SinhGordonSolution(
            u=ScalarField(self._grid(t), u),
            residual_norm=rnorm,
            branch_tag=BranchTag.CONTINUATION,
            iterations=iterations,
            parameter=t,
        )

    def _inner(self, a_u: np.ndarray, a_t: float, b_u: np.ndarray, b_t: float) -> float:
        return float(np.mean(a_u * b_u)) + a_t * b_t

    # ---------- driver ----------

    def run(self, bifurcation: Optional[Bifurcation] = None) -> list[SinhGordonSolution]:
        """
        Two amplitude-constrained start solutions followed by continuation_steps
        pseudo-arclength steps

        Raises:
            NoBifurcationDetected: the family crosses no resolvable |ξ|² = 4 mode
            StepFailure: a step failed after max_step_halvings halvings
        """
        cfg = self.cfg
        if bifurcation is None:
            found = detect_bifurcations(self.family, self.grid)
            if not found:
                raise NoBifurcationDetected(
                    "Lattice family crosses no resolvable mode with |xi|^2 = 4",
                    start=self.family.start.to_dict(),
                    end=self.family.end.to_dict(),
                )
            bifurcation = found[0]
        if len(bifurcation.modes) > 1:
            self.log.warning(f"Degenerate bifurcation at t={bifurcation.t:.6f}, following mode {bifurcation.modes[0]}")

        p, q = bifurcation.modes[0]
        s, tt = self.grid.logical
        phi = np.cos(2 * np.pi * (p * s + q * tt))
        phi_sq = float(np.mean(phi * phi))
        self.log.info(f"Bifurcation at t={bifurcation.t:.12f}, mode ({p}, {q})")

        eps = cfg.continuation_amplitude
        try:
            u0, t0, r0, i0 = self._correct(eps * phi, bifurcation.t, phi, 0.0, eps * phi_sq)
            u1, t1, r1, i1 = self._correct(2 * u0, t0, phi, 0.0, 2 * eps * phi_sq)
        except _CorrectorFailure as e:
            raise NonConvergence(f"Start of branch failed: {e}", t=bifurcation.t) from e

        branch = [self._solution(u0, t0, r0, i0), self._solution(u1, t1, r1, i1)]
        prev_u, prev_t, cur_u, cur_t = u0, t0, u1, t1

        for step in range(cfg.continuation_steps):
            tau_u, tau_t = cur_u - prev_u, cur_t - prev_t
            norm = math.sqrt(self._inner(tau_u, tau_t, tau_u, tau_t))
            tau_u, tau_t = tau_u / norm, tau_t / norm

            h = cfg.continuation_step
            for halving in range(cfg.max_step_halvings + 1):
                pred_u, pred_t = cur_u + h * tau_u, cur_t + h * tau_t
                target = self._inner(tau_u, tau_t, pred_u, pred_t)
                try:
                    new_u, new_t, rnorm, iterations = self._correct(pred_u, pred_t, tau_u, tau_t, target)
                    if np.max(np.abs(new_u)) < 1e-8:
                        raise _CorrectorFailure("corrector fell back onto the flat solution")
                    break
                except (_CorrectorFailure, NonConvergence) as e:
                    self.log.info(f"Step {step} failed with h={h:.3e}: {e}")
                    if halving == cfg.max_step_halvings:
                        raise StepFailure(
                            f"Continuation step {step} failed after {cfg.max_step_halvings} halvings",
                            last_good=branch[-1],
                            step=step,
                            h=h,
                        ) from e
                    h *= 0.5

            solution = self._solution(new_u, new_t, rnorm, iterations)
            branch.append(solution)
            self.log.info(
                f"Step {step}: t={new_t:.9f}, amplitude {solution.amplitude:.6f}",
                extra={"iteration": step, "residual": rnorm},
            )
            prev_u, prev_t, cur_u, cur_t = cur_u, cur_t, new_u, new_t

        return branch


def continue_branch(family: LatticeFamily, grid: Grid, cfg: Optional[SolveConfig] = None) -> list[SinhGordonSolution]:
    """Nontrivial solutions along a lattice family, starting at its first bifurcation"""
    return BranchContinuation(family, grid, cfg).run()
