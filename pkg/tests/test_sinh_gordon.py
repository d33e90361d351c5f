"""
Sinh-Gordon solver, 1-D shooting oracle, tiling and field files
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cmcindex.config import SolveConfig, Symmetry
from cmcindex.errors import DivergedToTrivial, NonConvergence
from cmcindex.models import BranchTag, Grid, ScalarField, TorusLattice
from cmcindex.services import lattice as lat
from cmcindex.services import sinh_gordon


# ==================== Shooting oracle ====================

def test_orbit_closes_after_one_period():
    orbit = sinh_gordon.shoot_1d(6.0, 32)
    assert_allclose(orbit.amplitude, math.acosh(1.5), rtol=1e-15)
    assert_allclose(orbit.return_time, orbit.period, rtol=1e-8)
    assert orbit.drift <= 1e-10
    assert orbit.profile[0] == pytest.approx(orbit.amplitude, abs=1e-12)


def test_period_shrinks_with_energy():
    periods = [sinh_gordon.orbit_period(e) for e in (4.5, 6.0, 10.0, 30.0)]
    assert periods == sorted(periods, reverse=True)
    # small oscillations of u'' = −4u have period π
    assert sinh_gordon.orbit_period(4.0001) == pytest.approx(math.pi, rel=1e-3)


@pytest.mark.parametrize("energy", [4.0, 3.0, -1.0])
def test_orbit_needs_energy_above_four(energy):
    with pytest.raises(ValueError):
        sinh_gordon.orbit_period(energy)


def test_shooting_needs_two_samples():
    with pytest.raises(ValueError):
        sinh_gordon.shoot_1d(6.0, 1)


def test_solve_1d_returns_period_and_profile():
    period, profile = sinh_gordon.solve_1d(6.0, 16)
    assert period == sinh_gordon.orbit_period(6.0)
    assert profile.shape == (16,)


# ==================== 1-D solution ====================

def test_oned_solution_matches_shooting_profile():
    solution = sinh_gordon.oned_solution(6.0, 128, 4, b=1.0)
    orbit = sinh_gordon.shoot_1d(6.0, 128)
    assert solution.branch_tag == BranchTag.ONED
    assert solution.residual_norm <= 1e-10
    assert_allclose(solution.grid.lattice.omega1, orbit.period, rtol=1e-15)
    for row in solution.u.values:
        assert np.max(np.abs(row - orbit.profile)) <= 1e-8


def test_oned_fixture_is_a_solution(oned):
    assert oned.residual_norm <= 1e-10
    assert sinh_gordon.residual_norm(oned.u) == pytest.approx(oned.residual_norm, abs=1e-14)
    assert oned.grid.shape == (8, 64)
    assert oned.amplitude > 0.9


def test_unpolished_profile_keeps_residual():
    solution = sinh_gordon.oned_solution(6.0, 64, 4, polish=False)
    assert solution.iterations == 0
    assert solution.residual_norm == sinh_gordon.residual_norm(solution.u)


# ==================== Newton ====================

def test_zero_seed_is_trivial(flat_grid):
    solution = sinh_gordon.solve(ScalarField.zeros(flat_grid))
    assert solution.branch_tag == BranchTag.TRIVIAL
    assert solution.residual_norm == 0.0
    assert solution.u.sup_norm == 0.0


def test_collapse_onto_zero_is_reported():
    grid = Grid(TorusLattice.square(1.0), 16, 16)
    seed = sinh_gordon.seed_field(grid, "cosine", amplitude=1e-3)
    with pytest.raises(DivergedToTrivial) as info:
        sinh_gordon.solve(seed)
    assert info.value.exit_code == 3
    assert info.value.details["history"]


def test_newton_recovers_perturbed_solution(oned):
    s, _ = oned.grid.logical
    seed = oned.u.with_values(oned.u.values + 1e-3 * np.cos(2 * np.pi * s))
    cfg = SolveConfig(symmetry=Symmetry.EVEN)
    solution = sinh_gordon.SinhGordonSolver(cfg).solve(seed)
    assert solution.branch_tag == BranchTag.NEWTON
    assert solution.residual_norm <= cfg.newton_tol
    assert list(solution.history) == sorted(solution.history, reverse=True)
    assert_allclose(solution.u.values, oned.u.values, atol=1e-7)


def test_newton_converges_quadratically(oned):
    s, _ = oned.grid.logical
    seed = oned.u.with_values(oned.u.values + 0.05 * np.cos(2 * np.pi * s))
    cfg = SolveConfig(symmetry=Symmetry.EVEN)
    solution = sinh_gordon.SinhGordonSolver(cfg).solve(seed)
    assert solution.history[0] > 1e-3
    constants = sinh_gordon.quadratic_constants(solution.history)
    assert constants
    assert max(constants) <= 10


def test_even_cosine_seed_on_square(flat_grid):
    seed = ScalarField.from_function(flat_grid, lambda x, y: 0.5 * (np.cos(x) + np.cos(y)))
    cfg = SolveConfig(symmetry=Symmetry.EVEN)
    try:
        solution = sinh_gordon.SinhGordonSolver(cfg).solve(seed)
    except DivergedToTrivial as info:
        assert info.exit_code == 3
        assert info.details["history"]
        return
    assert solution.branch_tag == BranchTag.NEWTON
    assert solution.residual_norm <= cfg.newton_tol
    assert solution.u.sup_norm >= 1e-8
    assert_allclose(lat.reflect(solution.u).values, solution.u.values, atol=1e-10)


def test_iteration_cap_raises(oned):
    s, _ = oned.grid.logical
    seed = oned.u.with_values(oned.u.values + 0.1 * np.cos(2 * np.pi * s))
    cfg = SolveConfig(symmetry=Symmetry.EVEN, max_iters=1, newton_tol=1e-14)
    with pytest.raises(NonConvergence):
        sinh_gordon.SinhGordonSolver(cfg).solve(seed)


def test_quadratic_constants():
    assert sinh_gordon.quadratic_constants([1.0, 1e-4, 1e-8, 1e-16]) == pytest.approx([1.0])
    assert sinh_gordon.quadratic_constants([1.0, 0.5]) == []


def test_seed_kinds(flat_grid):
    assert sinh_gordon.seed_field(flat_grid, "zero").sup_norm == 0.0
    assert sinh_gordon.seed_field(flat_grid, "cosine", 0.5).sup_norm == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sinh_gordon.seed_field(flat_grid, "spiral")


# ==================== Tiling and files ====================

def test_tile_stacks_copies(oned):
    tiled = sinh_gordon.tile(oned, 3)
    lattice = tiled.grid.lattice
    assert tiled.grid.shape == (24, 64)
    assert lattice.m == 3
    assert lattice.omega2 == 3j
    assert lattice.sub_generators[1] == oned.grid.lattice.omega2
    assert_allclose(tiled.u.values[16:24], oned.u.values, atol=0)
    assert tiled.residual_norm <= 1e-9


def test_tile_rejects_bad_multiplicity(oned):
    with pytest.raises(ValueError):
        sinh_gordon.tile(oned, 0)


def test_save_and_load(tmp_path, oned):
    path = tmp_path / "u.cmcf"
    sinh_gordon.save_field(oned, path)
    loaded = sinh_gordon.load_field(path)
    assert loaded.branch_tag == BranchTag.FILE
    assert loaded.u.values.tobytes() == oned.u.values.tobytes()
    assert loaded.residual_norm == sinh_gordon.residual_norm(oned.u)


def test_load_with_upsampling(tmp_path, oned):
    path = tmp_path / "u.cmcf"
    sinh_gordon.save_field(oned.u, path)
    before = sinh_gordon.residual_norm(oned.u)
    loaded = sinh_gordon.load_field(path, upsample=2)
    assert loaded.grid.shape == (16, 128)
    # round-off floor for residuals already at machine precision
    assert loaded.residual_norm <= 10 * max(before, 1e-13)
