"""
Nodal graphs, Euler relation, nodal domains, Courant checks and the vanishing fit
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cmcindex.errors import AmbiguousTopology, DegenerateField, DuplicatePoints, TooManyPoints
from cmcindex.models import Grid, NodalGraph, ScalarField, SpectrumReport, TorusLattice
from cmcindex.services import nodal, spectrum
from cmcindex.utils.svg import NEGATIVE_FILL, POSITIVE_FILL, render_graph

PI = math.pi

DIRECTIONS = [(1, 0), (0, 1), (1, 1), (1, -1)]


def _pairs() -> list[tuple[tuple[int, int], tuple[int, int]]]:
    return [(a, b) for i, a in enumerate(DIRECTIONS) for b in DIRECTIONS[i + 1:]]


def _profile(theta: np.ndarray, phase: float, r: float, psi: float) -> np.ndarray:
    """Two simple zeros per period"""
    return np.cos(theta - phase) + 0.3 * r * np.cos(2 * theta - psi)


def _line_corpus(grid: Grid, count: int, seed: int = 7) -> list[tuple[ScalarField, int]]:
    """Products f(d1·z)·g(d2·z) with their expected vertex count 4|det(d1, d2)|"""
    rng = np.random.default_rng(seed)
    x, y = grid.xy
    pairs = _pairs()
    out = []
    for n in range(count):
        (a1, b1), (a2, b2) = pairs[n % len(pairs)]
        p1, p2, s1, s2 = rng.uniform(0, 2 * PI, 4)
        r1, r2 = rng.uniform(0, 1, 2)
        values = _profile(a1 * x + b1 * y, p1, r1, s1) * _profile(a2 * x + b2 * y, p2, r2, s2)
        out.append((ScalarField(grid, values), 4 * abs(a1 * b2 - a2 * b1)))
    return out


def _trig_corpus(grid: Grid, count: int, modes: int = 3, seed: int = 3) -> list[ScalarField]:
    """Real trigonometric polynomials with random coefficients on |p|, |q| <= modes"""
    rng = np.random.default_rng(seed)
    s, t = grid.logical
    out = []
    for _ in range(count):
        values = np.zeros(grid.shape)
        for p in range(-modes, modes + 1):
            for q in range(-modes, modes + 1):
                a, b = rng.standard_normal(2)
                phase = 2 * np.pi * (p * s + q * t)
                values += a * np.cos(phase) + b * np.sin(phase)
        out.append(ScalarField(grid, values))
    return out


# ==================== Domain counts ====================

def test_sine_has_two_domains(field_of):
    assert nodal.count_nodal_domains(field_of(lambda x, y: np.sin(x))) == 2


def test_product_of_sines_has_four_domains(field_of):
    v = field_of(lambda x, y: np.sin(x) * np.sin(y))
    assert nodal.count_nodal_domains(v) == 4
    assert nodal.nodal_index_bound(v) == 2


def test_positive_field_has_one_domain(field_of):
    assert nodal.count_nodal_domains(field_of(lambda x, y: 2 + np.cos(x) * np.sin(y))) == 1


def test_zero_field_is_degenerate(flat_grid):
    with pytest.raises(DegenerateField):
        nodal.count_nodal_domains(ScalarField.zeros(flat_grid))
    with pytest.raises(DegenerateField):
        nodal.extract_graph(ScalarField.zeros(flat_grid))


def test_diagonal_strip_is_one_domain(square):
    # the positive set is one sample wide along x = y, so its samples touch only diagonally
    v = ScalarField.from_function(Grid(square, 64, 64), lambda x, y: np.cos(x - y) - 0.997)
    graph = nodal.extract_graph(v)
    assert graph.counts == {"F": 2, "E": 2, "V": 0, "r": 2}
    assert nodal.count_nodal_domains(v) == 2


def test_hermite_detects_dip_between_same_sign_samples():
    # w(s) = (s − 0.4)(s − 0.6) on [0, 1]
    w0, w1 = np.array([0.24]), np.array([0.24])
    d0, d1 = np.array([-1.0]), np.array([1.0])
    assert nodal._hermite_sign_change(w0, w1, d0, d1)[0]
    assert not nodal._hermite_sign_change(w0, w1, np.array([0.1]), np.array([-0.1]))[0]


# ==================== Graph extraction ====================

def test_sine_gives_two_loops(field_of):
    graph = nodal.extract_graph(field_of(lambda x, y: np.sin(x)))
    assert graph.counts == {"F": 2, "E": 2, "V": 0, "r": 2}
    for loop in graph.closed_loops:
        assert_allclose(np.sin([p[0] for p in loop]), 0.0, atol=1e-9)
    euler = nodal.euler_check(graph)
    assert euler.lhs == 0
    assert not euler.applicable
    assert euler.label == "lemma-not-applicable"
    assert euler.face_euler_sum is None


def test_product_of_sines_graph(field_of):
    graph = nodal.extract_graph(field_of(lambda x, y: np.sin(x) * np.sin(y)))
    assert graph.counts == {"F": 4, "E": 8, "V": 4, "r": 0}
    assert [v.degree for v in graph.vertices] == [4, 4, 4, 4]
    assert_allclose(
        [complex(*v.position) for v in graph.vertices],
        [0, 1j * PI, PI, PI + 1j * PI],
        atol=1e-9,
    )
    assert graph.degree_violations == []
    euler = nodal.euler_check(graph)
    assert (euler.lhs, euler.rhs, euler.holds, euler.label) == (0, 0, True, "holds")
    assert euler.face_euler_sum == 4


def test_edges_join_vertices(field_of):
    graph = nodal.extract_graph(field_of(lambda x, y: np.sin(x) * np.sin(y)))
    for edge in graph.edges:
        assert edge.start != edge.end
        assert edge.points[0] == graph.vertices[edge.start].position
        assert edge.points[-1] == graph.vertices[edge.end].position
        assert len(edge.points) > 2


def test_graph_json_starts_with_schema(field_of):
    graph = nodal.extract_graph(field_of(lambda x, y: np.sin(x) * np.sin(y)))
    assert graph.to_json().startswith('{\n  "schema": 1')


def test_svg_shades_both_signs(field_of, square):
    v = field_of(lambda x, y: np.sin(x) * np.sin(y))
    graph = nodal.extract_graph(v)
    text = render_graph(graph, square, nodal.sign_mask(v))
    assert POSITIVE_FILL in text
    assert NEGATIVE_FILL in text
    assert 'id="faces"' in text

    plain = render_graph(graph, square)
    assert POSITIVE_FILL not in plain
    assert NEGATIVE_FILL not in plain


def test_svg_of_positive_field_has_one_fill(field_of, square):
    v = field_of(lambda x, y: 2 + np.cos(x))
    text = render_graph(nodal.extract_graph(v), square, nodal.sign_mask(v))
    assert POSITIVE_FILL in text
    assert NEGATIVE_FILL not in text


def test_unresolved_saddles_are_ambiguous(field_of):
    v = field_of(lambda x, y: np.sin(x) * np.sin(y))
    with pytest.raises(AmbiguousTopology) as info:
        nodal.extract_graph(v, candidate_threshold=0.0)
    assert len(info.value.details["cells"]) == 4


def test_degree_six_vertices_at_half_periods(square):
    grid = Grid(square, 128, 128)
    v = ScalarField.from_function(grid, lambda x, y: 2 * np.sin(x) * np.cos(2 * y) - np.sin(2 * x) * np.cos(y))
    graph = nodal.extract_graph(v)
    assert sorted(vertex.degree for vertex in graph.vertices) == [4, 4, 4, 4, 6, 6]
    assert graph.num_edges == 14
    assert nodal.euler_check(graph).holds

    rows = nodal.half_period_degrees(v, graph)
    assert [row["half_period"] for row in rows] == ["w0", "w1", "w2", "w3"]
    assert [row["degree"] for row in rows] == [6, 2, 2, 6]
    assert [row["critical"] for row in rows] == [True, False, False, True]
    assert all(row["vanishes"] for row in rows)


@pytest.mark.parametrize(
    "func, degrees",
    [
        (lambda x, y: np.cos(x) * np.cos(y), [0, 0, 0, 0]),
        (lambda x, y: np.sin(x), [2, 2, 2, 2]),
        (lambda x, y: np.cos(x) + np.cos(y) + np.sin(x), [0, 2, 2, 0]),
    ],
)
def test_half_period_degrees_without_vertices(field_of, func, degrees):
    rows = nodal.half_period_degrees(field_of(func), NodalGraph())
    assert [row["degree"] for row in rows] == degrees
    assert not any(row["critical"] for row in rows)


def test_find_vertices_refines_off_grid_crossings(square):
    grid = Grid(square, 48, 48)
    v = ScalarField.from_function(grid, lambda x, y: np.sin(x - 0.3) * np.sin(y - 1.1))
    found = nodal.find_vertices(v)
    expected = [0.3 + 1.1j, 0.3 + (1.1 + PI) * 1j, 0.3 + PI + 1.1j, 0.3 + PI + (1.1 + PI) * 1j]
    assert_allclose(sorted(found, key=lambda z: (z.real, z.imag)), expected, atol=1e-9)


# ==================== Corpus ====================

def test_line_corpus_euler_and_domains(square):
    grid = Grid(square, 64, 64)
    checked = 0
    for v, expected_vertices in _line_corpus(grid, 60):
        try:
            graph = nodal.extract_graph(v)
        except AmbiguousTopology:
            continue
        checked += 1
        counts = graph.counts
        assert counts["V"] == expected_vertices
        assert counts["E"] >= 2 * counts["V"]
        euler = nodal.euler_check(graph)
        assert euler.applicable and euler.holds
        assert nodal.count_nodal_domains(v) == graph.faces
        assert graph.degree_violations == []
    assert checked >= 50


def test_trig_corpus_domains_match_faces(square):
    grid = Grid(square, 64, 64)
    checked = 0
    for v in _trig_corpus(grid, 40):
        try:
            graph = nodal.extract_graph(v)
        except AmbiguousTopology:
            continue
        checked += 1
        assert nodal.euler_check(graph).holds
        assert nodal.count_nodal_domains(v) == graph.faces
    assert checked >= 35


# ==================== Euler relation ====================

@pytest.mark.parametrize(
    "counts, genus, lhs, label",
    [
        ((4, 8, 4), 1, 0, "holds"),
        ((1, 4, 1), 1, -2, "violated"),
        ((2, 6, 2), 2, -2, "holds"),
        ((0, 2, 2), 1, 0, "lemma-not-applicable"),
    ],
)
def test_euler_from_counts(counts, genus, lhs, label):
    vertices, edges, faces = counts
    result = nodal.euler_check(genus=genus, vertices=vertices, edges=edges, faces=faces)
    assert result.lhs == lhs
    assert result.rhs == 2 - 2 * genus
    assert result.label == label


def test_face_euler_sum_needs_loop_free_graph():
    assert nodal.euler_check(vertices=4, edges=8, faces=4).face_euler_sum == 4
    assert nodal.euler_check(vertices=4, edges=9, faces=5, loops=1).face_euler_sum is None


def test_euler_needs_counts():
    with pytest.raises(ValueError):
        nodal.euler_check(vertices=1, edges=2)


# ==================== Courant ====================

def test_courant_on_flat_torus(square):
    op = spectrum.JacobiOperator(ScalarField.zeros(Grid(square, 48, 48)))
    report = spectrum.eigen(op, 14)
    rows = nodal.courant_check(report, combinations=20, seed=0)
    eigen_rows = [r for r in rows if r.kind == "eigenfield"]
    assert [r.bound for r in eigen_rows] == [1, 2, 2, 2, 2, 6, 6, 6, 6, 10, 10, 10, 10, 14]
    assert len(rows) == 14 + 20 * 3
    assert all(r.ok for r in rows)


def test_courant_on_oned_solution(oned):
    report = spectrum.eigen(spectrum.JacobiOperator(oned.u), 12)
    rows = nodal.courant_check(report)
    assert rows[0].domains == 1
    assert all(r.ok for r in rows)


def test_courant_needs_eigenfields(flat_report_stub):
    with pytest.raises(ValueError):
        nodal.courant_check(flat_report_stub)


@pytest.fixture
def flat_report_stub():
    return SpectrumReport(
        eigenvalues=[-1.0, 0.5],
        neg_count=1,
        zero_mult=0,
        zero_tol=1e-4,
        index_lower=0,
        index_upper=1,
        ground_state_simple=True,
        kernel_flag=False,
    )


# ==================== Vanishing fit ====================

def test_fit_cancels_value_and_gradient(field_of):
    fields = [field_of(f) for f in (
        lambda x, y: np.cos(x),
        lambda x, y: np.sin(x),
        lambda x, y: np.cos(y),
        lambda x, y: np.sin(y),
    )]
    fit = nodal.vanishing_fit(fields, [0j])
    assert_allclose(fit.coefficients, [2 ** -0.5, 0.0, -(2 ** -0.5), 0.0], atol=1e-12)
    assert fit.residual < 1e-12
    assert fit.basis_size == 4
    assert fit.least_singular_value == 0.0
    assert not fit.no_exact_kernel
    assert fit.replicated_points == [(0.0, 0.0)]

    v = nodal.combine(fields, fit.coefficients)
    assert_allclose(v.values, (np.cos(v.grid.xy[0]) - np.cos(v.grid.xy[1])) / math.sqrt(2), atol=1e-12)


def test_fit_reports_missing_kernel(field_of):
    fields = [field_of(f) for f in (
        lambda x, y: 1.0 + 0 * x,
        lambda x, y: np.sin(x),
        lambda x, y: np.sin(y),
    )]
    fit = nodal.vanishing_fit(fields, [0j])
    assert fit.least_singular_value == pytest.approx(1.0)
    assert fit.no_exact_kernel


def test_fit_replicates_points_over_copies():
    lattice = TorusLattice.rectangular(2 * PI, 4 * PI, m=2)
    grid = Grid(lattice, 32, 64)
    fields = [ScalarField.from_function(grid, f) for f in (
        lambda x, y: np.cos(x),
        lambda x, y: np.sin(x),
        lambda x, y: np.cos(y),
    )]
    fit = nodal.vanishing_fit(fields, [PI / 2 + 1j])
    assert_allclose(
        [complex(*p) for p in fit.replicated_points],
        [PI / 2 + 1j, PI / 2 + (1 + 2 * PI) * 1j],
        atol=1e-12,
    )


def test_fit_point_limit(field_of):
    fields = [field_of(lambda x, y: np.sin(x)), field_of(lambda x, y: np.cos(x))]
    with pytest.raises(TooManyPoints):
        nodal.vanishing_fit(fields, [0.5 + 0.5j])


def test_fit_rejects_duplicate_points(field_of):
    fields = [field_of(lambda x, y: np.sin(k * x + y)) for k in range(6)]
    with pytest.raises(DuplicatePoints):
        nodal.vanishing_fit(fields, [0.5 + 0.5j, 0.5 + 2 * PI + 0.5j])


def test_domain_count_chain(field_of):
    graph = nodal.extract_graph(field_of(lambda x, y: np.sin(x) * np.sin(y)))
    chain = nodal.domain_count_chain(graph, points=1, m=1)
    assert chain == {
        "vertices_at_least_m_points": True,
        "euler": True,
        "edges_at_least_twice_vertices": True,
        "premises": True,
        "faces_at_least_m_points": True,
        "implication_holds": True,
    }
    assert not nodal.domain_count_chain(graph, points=5, m=1)["premises"]
