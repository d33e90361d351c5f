"""
Jacobi operator, eigen-solves and the variational quantities
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cmcindex.errors import NotEnoughEigenvalues
from cmcindex.models import Grid, ScalarField, TorusLattice
from cmcindex.services import hierarchy, sinh_gordon, spectrum
from cmcindex.services import lattice as lat


@pytest.fixture(scope="module")
def flat_report():
    """u ≡ 0 on the 2π square at 64x64, dense"""
    grid = Grid(TorusLattice.square(2 * math.pi), 64, 64)
    op = spectrum.JacobiOperator(ScalarField.zeros(grid))
    return op, spectrum.eigen(op, 21)


# ==================== Flat torus ====================

def test_flat_spectrum_matches_fourier_oracle(flat_report):
    op, report = flat_report
    assert op.discretization == "dense"
    expected = spectrum.flat_spectrum_oracle(op.lattice, 21)
    assert_allclose(report.eigenvalues, expected, atol=1e-8)
    assert_allclose(expected[[0, 1, 5, 9, 13]], [-1.0, -0.75, -0.5, 0.0, 0.25])


def test_flat_index_interval(flat_report):
    _, report = flat_report
    assert report.zero_tol == pytest.approx(1e-4)
    assert report.neg_count == 9
    assert report.zero_mult == 4
    assert (report.index_lower, report.index_upper) == (8, 9)
    assert report.kernel_flag
    assert report.ground_state_simple


def test_eigenfields_are_orthonormal(flat_report):
    _, report = flat_report
    fields = report.eigenfields[:9]
    gram = np.array([[lat.inner(a, b) for b in fields] for a in fields])
    assert_allclose(gram, np.eye(9), atol=1e-10)


def test_rayleigh_quotient_of_eigenfields(flat_report):
    op, report = flat_report
    for value, field in zip(report.eigenvalues[:6], report.eigenfields[:6]):
        assert spectrum.rayleigh_quotient(field, op) == pytest.approx(value, abs=1e-10)


def test_count_must_pass_zero(square):
    op = spectrum.JacobiOperator(ScalarField.zeros(Grid(square, 16, 16)))
    with pytest.raises(NotEnoughEigenvalues) as info:
        spectrum.eigen(op, 5)
    assert info.value.exit_code == 3
    with pytest.raises(NotEnoughEigenvalues):
        spectrum.eigen(op, 16 * 16 + 1)


def test_resolve_spectrum_grows_count(square):
    op = spectrum.JacobiOperator(ScalarField.zeros(Grid(square, 16, 16)))
    report = spectrum.resolve_spectrum(op, 4)
    assert len(report.eigenvalues) == 16
    assert report.neg_count == 9


def test_operator_is_symmetric(oned):
    op = spectrum.JacobiOperator(oned.u)
    assert op.symmetry_defect() < 1e-12
    dense = op.dense_matrix()
    x = np.random.default_rng(1).standard_normal(op.size)
    expected = op.matvec(x)
    assert_allclose(dense @ x, expected, atol=1e-10 * np.abs(expected).max())


def test_report_serializes_without_fields(flat_report):
    _, report = flat_report
    text = report.to_json()
    assert text.lstrip().startswith('{\n  "schema": 1')
    assert "eigenfields" not in text


# ==================== 1-D solution ====================

def test_oned_spectrum_has_translation_kernel(oned):
    op = spectrum.JacobiOperator(oned.u)
    v1 = hierarchy.jacobi_field(1, oned.u)
    report = spectrum.eigen(op, 12, kernel_fields=[v1])
    assert report.zero_mult >= 1
    assert report.kernel_witness_rank == 1
    assert report.neg_count >= 1
    assert report.index_upper == report.index_lower + 1


@pytest.mark.parametrize("solver", ["lanczos", "lobpcg"])
def test_matrix_free_solvers_agree_with_dense(oned, solver):
    dense = spectrum.eigen(spectrum.JacobiOperator(oned.u), 8)
    op = spectrum.JacobiOperator(oned.u, discretization="matrix_free")
    report = spectrum.eigen(op, 8, solver=solver, eig_tol=1e-10)
    assert report.discretization == "matrix_free"
    assert report.eigenvalues[0] == pytest.approx(dense.eigenvalues[0], abs=1e-8)
    assert min(abs(v) for v in report.eigenvalues) < 1e-6


def test_second_variation_forms_agree(oned, band_limited):
    u = oned.u
    op = spectrum.JacobiOperator(u)
    for _ in range(20):
        v = band_limited(u.grid)
        extrinsic = spectrum.second_variation(v, op)
        intrinsic = spectrum.intrinsic_second_variation(v, u)
        scale = abs(extrinsic) + 4 * lat.l2_norm(v) ** 2
        assert abs(intrinsic - extrinsic) <= 1e-6 * scale


def test_curvature_forms_agree(oned):
    metric = spectrum.gauss_curvature(oned.u, "metric")
    equation = spectrum.gauss_curvature(oned.u, "equation")
    assert_allclose(metric, equation, atol=1e-8)
    with pytest.raises(ValueError):
        spectrum.gauss_curvature(oned.u, "intrinsic")


def test_translation_field_preserves_volume(oned):
    v1 = hierarchy.jacobi_field(1, oned.u)
    assert abs(spectrum.volume_functional(v1, oned.u)) < 1e-10


def test_gram_rank(oned, field_of):
    v1, _, v3 = hierarchy.jacobi_fields(3, oned.u)
    assert spectrum.gram_rank([v1, v3]) == 1
    assert spectrum.gram_rank([field_of(lambda x, y: np.sin(x)), field_of(lambda x, y: np.cos(x))]) == 2
    assert spectrum.gram_rank([ScalarField.zeros(oned.grid)]) == 0
    with pytest.raises(ValueError):
        spectrum.gram_rank([])


def test_default_zero_tol_scales_with_potential(oned):
    op = spectrum.JacobiOperator(oned.u)
    assert spectrum.default_zero_tol(op) == pytest.approx(1e-4 * np.cosh(oned.u.values).max())


def test_negative_count_survives_resolution_doubling():
    counts = []
    for nx, ny in ((32, 8), (64, 16)):
        u = sinh_gordon.oned_solution(6.0, nx, ny, b=1.0).u
        counts.append(spectrum.resolve_spectrum(spectrum.JacobiOperator(u), 12).neg_count)
    assert counts[0] == counts[1]
    assert counts[0] >= 1
