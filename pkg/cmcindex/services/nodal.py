"""
Nodal sets as graphs-with-loops

Zero curves are traced by marching squares on the grid staggered by half a
cell, so cell centres coincide with the original nodes. Vertices (points where
the field and its gradient vanish) are masked by a disk of cells; curve ends on
the mask boundary are attached to the vertex. Faces and nodal domains share
one labelling of the staggered samples, so the two counts always agree.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.ndimage import minimum_filter

from cmcindex.errors import AmbiguousTopology, DegenerateField, DuplicatePoints, TooManyPoints
from cmcindex.models import (
    CourantRow,
    EulerResult,
    Grid,
    NodalEdge,
    NodalGraph,
    NodalVertex,
    ScalarField,
    SpectrumReport,
    TorusLattice,
    VanishingFit,
)
from cmcindex.services import lattice as lat
from cmcindex.utils.logger import get_logger
from cmcindex.utils.unionfind import UnionFind

logger = get_logger(__name__)

DEGENERATE_NORM = 1e-12
NEWTON_ITERATIONS = 30


def _sup(v: ScalarField) -> float:
    vmax = v.sup_norm
    if vmax < DEGENERATE_NORM:
        raise DegenerateField(f"Field is numerically zero (sup-norm {vmax:.2e})", sup_norm=vmax)
    return vmax


# ==================== Vertices ====================

def _index_coords(grid: Grid, z: complex) -> np.ndarray:
    s, t = lat.to_logical(grid.lattice, [z])
    return np.array([float(s[0]) * grid.nx, float(t[0]) * grid.ny])


def _wrapped(delta: np.ndarray, grid: Grid) -> np.ndarray:
    period = np.array([grid.nx, grid.ny], dtype=float)
    return delta - period * np.round(delta / period)


def _from_index(grid: Grid, x: float, y: float) -> complex:
    lattice = grid.lattice
    return (x / grid.nx) * lattice.omega1 + (y / grid.ny) * lattice.omega2


def find_vertices(
    v: ScalarField,
    tol_zero: float = 1e-6,
    tol_vertex: float = 1e-3,
    candidate_threshold: float = 0.25,
) -> list[complex]:
    """
    Points where v and ∇v vanish, refined by Newton on ∇v = 0

    Args:
        v: field
        tol_zero: accept |v| ≤ tol_zero·‖v‖∞
        tol_vertex: accept |∇v| ≤ tol_vertex·‖∇v‖∞
        candidate_threshold: local minima of |v|/‖v‖∞ + |∇v|/‖∇v‖∞ below this are refined

    Returns:
        Vertex positions (complex), sorted
    """
    grid = v.grid
    vmax = _sup(v)
    gx, gy = lat.gradient(v, check=False)
    gnorm = np.hypot(gx.values, gy.values)
    gmax = float(np.max(gnorm))
    if gmax == 0.0:
        return []

    score = np.abs(v.values) / vmax + gnorm / gmax
    minima = (score == minimum_filter(score, size=3, mode="wrap")) & (score < candidate_threshold)
    ks, js = np.nonzero(minima)
    order = np.argsort(score[ks, js], kind="stable")

    accepted: list[complex] = []
    accepted_idx: list[np.ndarray] = []
    for k, j in zip(ks[order].tolist(), js[order].tolist()):
        z0 = complex(grid.points[k, j])
        if abs(v.values[k, j]) <= tol_zero * vmax and gnorm[k, j] <= tol_vertex * gmax:
            z = z0
        else:
            z = _refine_vertex(v, z0)
            if z is None:
                continue
            value = abs(float(lat.interpolate(v, [z])[0]))
            grad = math.hypot(float(lat.interpolate(v, [z], 1, 0)[0]), float(lat.interpolate(v, [z], 0, 1)[0]))
            moved = np.linalg.norm(_wrapped(_index_coords(grid, z) - np.array([j, k], dtype=float), grid))
            if value > tol_zero * vmax or grad > tol_vertex * gmax or moved > 2.0:
                continue

        idx = _index_coords(grid, z)
        if any(np.linalg.norm(_wrapped(idx - other, grid)) <= 1.0 for other in accepted_idx):
            continue
        accepted.append(complex(grid.lattice.reduce(z, sub=False)))
        accepted_idx.append(idx)

    return sorted(accepted, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


def _refine_vertex(v: ScalarField, z: complex) -> Optional[complex]:
    """Newton on ∇v = 0 with pinv(Hessian), steps capped at one cell"""
    grid = v.grid
    inv_jac = np.linalg.inv(grid.lattice.jacobian)
    cells = np.array([grid.nx, grid.ny], dtype=float)
    for _ in range(NEWTON_ITERATIONS):
        g = np.array([lat.interpolate(v, [z], 1, 0)[0], lat.interpolate(v, [z], 0, 1)[0]])
        hxy = lat.interpolate(v, [z], 1, 1)[0]
        hess = np.array([[lat.interpolate(v, [z], 2, 0)[0], hxy], [hxy, lat.interpolate(v, [z], 0, 2)[0]]])
        step = -linalg.pinv(hess) @ g
        step_idx = (inv_jac @ step) * cells
        length = float(np.linalg.norm(step_idx))
        if not math.isfinite(length):
            return None
        if length > 1.0:
            step = step / length
        z = z + complex(step[0], step[1])
        if length < 1e-12:
            break
    return z


# ==================== Sign labelling ====================
#
# Domains and faces are both components of the sign pattern of the staggered
# samples w[k, j] = v at index position (j + ½, k + ½). Same-sign neighbours are
# linked unless their Hermite interpolant changes sign; unmasked saddle cells
# link their diagonal through the sign of the cell centre, which is the
# original node v[k + 1, j + 1]. Cells near a vertex are masked and never link
# diagonally.

def _hermite_sign_change(w0: np.ndarray, w1: np.ndarray, d0: np.ndarray, d1: np.ndarray) -> np.ndarray:
    """
    Whether the cubic Hermite interpolant on [0, 1] with end values w0, w1 and
    end slopes d0, d1 reaches the opposite sign of w0 (w0, w1 of equal sign)
    """
    a = 2 * w0 + d0 - 2 * w1 + d1
    b = -3 * w0 - 2 * d0 + 3 * w1 - d1
    c = d0
    scale = np.abs(w0) + np.abs(w1) + np.abs(d0) + np.abs(d1) + 1e-300
    sign = np.sign(w0)

    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 3 * a * c
        cubic = np.abs(a) > 1e-12 * scale
        root = np.sqrt(np.maximum(disc, 0.0))
        quadratic = np.where(np.abs(b) > 1e-12 * scale, -c / (2 * b), np.nan)
        r1 = np.where(cubic, np.where(disc >= 0, (-b - root) / (3 * a), np.nan), quadratic)
        r2 = np.where(cubic & (disc >= 0), (-b + root) / (3 * a), np.nan)

        crosses = np.zeros(np.shape(w0), dtype=bool)
        for r in (r1, r2):
            inside = np.isfinite(r) & (r > 0.0) & (r < 1.0)
            rr = np.where(inside, r, 0.0)
            value = ((a * rr + b) * rr + c) * rr + w0
            crosses |= inside & (sign * value <= 0.0)
    return crosses


def _edge_links(values: np.ndarray, grid: Grid, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Same-sign neighbours along an axis (1: j direction, 0: k direction) whose
    Hermite interpolant keeps its sign

    Returns:
        (linked mask over the lower node, flat index of the upper node)
    """
    ds, dt = lat.logical_derivatives(values, grid)
    slope = ds / grid.nx if axis == 1 else dt / grid.ny
    w1 = np.roll(values, -1, axis=axis)
    d1 = np.roll(slope, -1, axis=axis)
    same = (values >= 0.0) == (w1 >= 0.0)
    linked = same & ~_hermite_sign_change(values, w1, slope, d1)
    upper = np.roll(np.arange(grid.size).reshape(grid.shape), -1, axis=axis)
    return linked, upper


def _vertex_owner(grid: Grid, vertex_idx: Sequence[np.ndarray], mask_radius: float) -> np.ndarray:
    """Index of the vertex masking each staggered cell, -1 where unmasked"""
    if not vertex_idx:
        return np.full(grid.shape, -1, dtype=int)
    kk, jj = np.meshgrid(np.arange(grid.ny), np.arange(grid.nx), indexing="ij")
    centers = np.stack([jj + 1.0, kk + 1.0], axis=-1)
    dists = np.stack([np.linalg.norm(_wrapped(centers - idx, grid), axis=-1) for idx in vertex_idx])
    nearest = np.argmin(dists, axis=0)
    return np.where(np.min(dists, axis=0) <= mask_radius, nearest, -1)


def _resolve_saddles(w: np.ndarray, center: np.ndarray, masked: np.ndarray, zero: float, grid: Grid) -> dict:
    """
    Unmasked cells whose corners alternate in sign, mapped to whether the
    centre joins the lower-left corner

    Raises:
        AmbiguousTopology: a saddle centre is zero at tolerance
    """
    p00 = w >= 0.0
    p10 = np.roll(p00, -1, axis=1)
    p01 = np.roll(p00, -1, axis=0)
    p11 = np.roll(p00, (-1, -1), axis=(0, 1))
    saddle = (p00 == p11) & (p10 == p01) & (p00 != p10) & ~masked

    ambiguous = saddle & (np.abs(center) <= zero)
    if ambiguous.any():
        cells = [(int(k), int(j)) for k, j in zip(*np.nonzero(ambiguous))]
        raise AmbiguousTopology(
            f"{len(cells)} saddle cell(s) with a zero centre at tolerance; refine the grid",
            cells=cells,
            grid=f"{grid.nx}x{grid.ny}",
        )
    joins = (center >= 0.0) == p00
    return {(int(k), int(j)): bool(joins[k, j]) for k, j in zip(*np.nonzero(saddle))}


def _sign_labels(w: np.ndarray, grid: Grid, saddles: dict) -> np.ndarray:
    """Component root of every staggered sample"""
    nx, ny = grid.nx, grid.ny
    uf = UnionFind(grid.size)
    nodes = np.arange(grid.size).reshape(grid.shape)
    for axis in (0, 1):
        linked, upper = _edge_links(w, grid, axis)
        uf.union_pairs(nodes[linked], upper[linked])
    for (k, j), joins_c00 in sorted(saddles.items()):
        if joins_c00:
            uf.union(nodes[k, j], nodes[(k + 1) % ny, (j + 1) % nx])
        else:
            uf.union(nodes[k, (j + 1) % nx], nodes[(k + 1) % ny, j])
    return uf.roots().reshape(grid.shape)


class _SignPattern:
    """Staggered samples of v with vertices, mask, resolved saddles and component labels"""

    def __init__(
        self,
        v: ScalarField,
        tol_zero: float,
        tol_vertex: float,
        mask_radius: float,
        candidate_threshold: float,
    ):
        grid = v.grid
        self.grid = grid
        self.vmax = _sup(v)
        self.vertices = find_vertices(v, tol_zero, tol_vertex, candidate_threshold)
        self.vertex_idx = [_index_coords(grid, z) for z in self.vertices]
        self.w = lat.shift(v, 0.5 / grid.nx, 0.5 / grid.ny).values
        self.positive = self.w >= 0.0
        self.center = np.roll(v.values, (-1, -1), axis=(0, 1))
        self.owner = _vertex_owner(grid, self.vertex_idx, mask_radius)
        self.masked = self.owner >= 0
        self.saddles = _resolve_saddles(self.w, self.center, self.masked, tol_zero * self.vmax, grid)
        self.labels = _sign_labels(self.w, grid, self.saddles)

    @property
    def components(self) -> int:
        return int(np.unique(self.labels).size)


def count_nodal_domains(
    v: ScalarField,
    tol_zero: float = 1e-6,
    tol_vertex: float = 1e-3,
    mask_radius: float = 3.0,
    candidate_threshold: float = 0.25,
) -> int:
    """
    Sign components of v on the torus, labelled exactly as extract_graph
    labels faces

    Raises:
        DegenerateField: v numerically zero
        AmbiguousTopology: a saddle cell centre is zero at tolerance
    """
    return _SignPattern(v, tol_zero, tol_vertex, mask_radius, candidate_threshold).components


def sign_mask(v: ScalarField) -> np.ndarray:
    """v ≥ 0 on the staggered samples (index positions (j + ½, k + ½))"""
    _sup(v)
    grid = v.grid
    return lat.shift(v, 0.5 / grid.nx, 0.5 / grid.ny).values >= 0.0


# ==================== Graph extraction ====================

def extract_graph(
    v: ScalarField,
    tol_zero: float = 1e-6,
    tol_vertex: float = 1e-3,
    mask_radius: float = 3.0,
    candidate_threshold: float = 0.25,
) -> NodalGraph:
    """
    Trace the zero set of v as a graph-with-loops

    Args:
        v: field on its grid
        tol_zero: relative value tolerance for vertices and saddle cells
        tol_vertex: relative gradient tolerance for vertices
        mask_radius: cells whose centre lies within this many index units of a vertex are masked
        candidate_threshold: vertex candidate cutoff

    Returns:
        NodalGraph with vertices, edges, closed loops and the face count

    Raises:
        DegenerateField: v numerically zero
        AmbiguousTopology: a saddle cell centre is zero at tolerance
    """
    grid = v.grid
    nx, ny, n = grid.nx, grid.ny, grid.size
    pattern = _SignPattern(v, tol_zero, tol_vertex, mask_radius, candidate_threshold)
    vertices, w, positive, masked = pattern.vertices, pattern.w, pattern.positive, pattern.masked

    h_cross = positive != np.roll(positive, -1, axis=1)
    v_cross = positive != np.roll(positive, -1, axis=0)

    def h_id(k: int, j: int) -> int:
        return (k % ny) * nx + (j % nx)

    def v_id(k: int, j: int) -> int:
        return n + (k % ny) * nx + (j % nx)

    adjacency: dict[int, list[int]] = {}

    def link(a: int, b: int) -> None:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)

    for k in range(ny):
        for j in range(nx):
            if masked[k, j]:
                continue
            sides = []
            if h_cross[k, j]:
                sides.append(("bottom", h_id(k, j)))
            if v_cross[k, (j + 1) % nx]:
                sides.append(("right", v_id(k, j + 1)))
            if h_cross[(k + 1) % ny, j]:
                sides.append(("top", h_id(k + 1, j)))
            if v_cross[k, j]:
                sides.append(("left", v_id(k, j)))

            if len(sides) == 2:
                link(sides[0][1], sides[1][1])
            elif len(sides) == 4:
                ids = dict(sides)
                if pattern.saddles[(k, j)]:
                    link(ids["bottom"], ids["right"])
                    link(ids["top"], ids["left"])
                else:
                    link(ids["left"], ids["bottom"])
                    link(ids["right"], ids["top"])

    # Curve ends on the mask boundary attach to the masking vertex
    attached: dict[int, int] = {}
    points: dict[int, tuple[float, float]] = {}
    for k, j in zip(*np.nonzero(h_cross)):
        pid = h_id(k, j)
        tau = w[k, j] / (w[k, j] - w[k, (j + 1) % nx])
        points[pid] = (j + 0.5 + tau, k + 0.5)
        _attach(pid, [(k, j), ((k - 1) % ny, j)], pattern.owner, attached)
    for k, j in zip(*np.nonzero(v_cross)):
        pid = v_id(k, j)
        tau = w[k, j] / (w[k, j] - w[(k + 1) % ny, j])
        points[pid] = (j + 0.5, k + 0.5 + tau)
        _attach(pid, [(k, j), (k, (j - 1) % nx)], pattern.owner, attached)

    def physical(pid: int) -> tuple[float, float]:
        z = grid.lattice.reduce(_from_index(grid, *points[pid]), sub=False)
        return (float(z.real), float(z.imag))

    edges, loops = _trace(adjacency, attached)
    degree = [0] * len(vertices)
    graph_edges = []
    for start, end, path in edges:
        degree[start] += 1
        degree[end] += 1
        polyline = [(vertices[start].real, vertices[start].imag)]
        polyline += [physical(p) for p in path]
        polyline.append((vertices[end].real, vertices[end].imag))
        graph_edges.append(NodalEdge(start=start, end=end, points=polyline))
    closed_loops = [[physical(p) for p in cycle] for cycle in loops]

    violations = [i for i, d in enumerate(degree) if d < 4 or d % 2]
    if violations:
        logger.warning(
            f"Vertex degree violations at {violations}: degrees {[degree[i] for i in violations]}",
            extra={"stage": "nodal"},
        )

    graph = NodalGraph(
        vertices=[NodalVertex(position=(z.real, z.imag), degree=d) for z, d in zip(vertices, degree)],
        edges=graph_edges,
        closed_loops=closed_loops,
        faces=pattern.components,
        tol_zero=tol_zero,
        tol_vertex=tol_vertex,
        degree_violations=violations,
    )
    logger.debug(f"Nodal graph {graph.counts}", extra={"stage": "nodal", "grid": f"{nx}x{ny}"})
    return graph


def _attach(pid: int, cells: list[tuple[int, int]], owner: np.ndarray, attached: dict[int, int]) -> None:
    owners = [int(owner[k, j]) for k, j in cells]
    masked = [o for o in owners if o >= 0]
    if len(masked) == 1:
        attached[pid] = masked[0]


def _trace(adjacency: dict[int, list[int]], attached: dict[int, int]) -> tuple[list, list]:
    """Split the segment graph into vertex-to-vertex paths and vertex-free cycles"""
    visited: set[int] = set()
    edges = []
    for start in sorted(attached):
        if start in visited:
            continue
        path, prev, cur = [start], None, start
        visited.add(start)
        while True:
            nbrs = list(adjacency.get(cur, []))
            if prev is not None and prev in nbrs:
                nbrs.remove(prev)
            if not nbrs:
                break
            prev, cur = cur, nbrs[0]
            path.append(cur)
            visited.add(cur)
            if cur in attached:
                break
        if len(path) > 1 and path[-1] in attached:
            edges.append((attached[start], attached[path[-1]], path))
        else:
            logger.warning(f"Dangling nodal curve from point {start}", extra={"stage": "nodal"})

    loops = []
    for start in sorted(adjacency):
        if start in visited:
            continue
        cycle, prev, cur = [start], None, start
        visited.add(start)
        for _ in range(len(adjacency) + 1):
            nbrs = list(adjacency[cur])
            if prev is not None and prev in nbrs:
                nbrs.remove(prev)
            if not nbrs:
                break
            prev, cur = cur, nbrs[0]
            if cur == start:
                break
            cycle.append(cur)
            visited.add(cur)
        loops.append(cycle)
    return edges, loops


# ==================== Euler relation ====================

def euler_check(
    graph: Optional[NodalGraph] = None,
    genus: int = 1,
    *,
    vertices: Optional[int] = None,
    edges: Optional[int] = None,
    faces: Optional[int] = None,
    loops: int = 0,
) -> EulerResult:
    """
    ℱ − ℰ + 𝒱 against χ(M) = 2 − 2·genus

    Counts come from the graph or are given directly (edges include closed loops).
    With no vertex the inequality is not guaranteed and the result is labelled
    "lemma-not-applicable". With no closed loop the face Euler characteristics
    Σχ(V_j) = χ(M) + ℰ − 𝒱 are reported as face_euler_sum.
    """
    if graph is not None:
        vertices, edges, faces, loops = graph.num_vertices, graph.num_edges, graph.faces, graph.num_loops
    if vertices is None or edges is None or faces is None:
        raise ValueError("euler_check needs a graph or vertex, edge and face counts")

    lhs = faces - edges + vertices
    rhs = 2 - 2 * genus
    holds = lhs >= rhs
    applicable = vertices >= 1
    if not applicable:
        label = "lemma-not-applicable"
    else:
        label = "holds" if holds else "violated"
    return EulerResult(
        lhs=lhs,
        rhs=rhs,
        holds=holds,
        applicable=applicable,
        label=label,
        face_euler_sum=rhs + edges - vertices if loops == 0 else None,
    )


# ==================== Courant bound ====================

def _clusters(eigenvalues: Sequence[float], cluster_tol: float) -> list[int]:
    """1-based first index of the cluster holding each eigenvalue"""
    firsts: list[int] = []
    for i, value in enumerate(eigenvalues):
        if i and abs(value - eigenvalues[i - 1]) <= cluster_tol * max(1.0, abs(value)):
            firsts.append(firsts[-1])
        else:
            firsts.append(i + 1)
    return firsts


def courant_check(
    report: SpectrumReport,
    tol_zero: float = 1e-6,
    cluster_tol: float = 1e-8,
    combinations: int = 20,
    seed: int = 0,
    *,
    tol_vertex: float = 1e-3,
    mask_radius: float = 3.0,
    candidate_threshold: float = 0.25,
) -> list[CourantRow]:
    """
    Nodal domains of each eigenfield, and of random unit combinations inside each
    degenerate cluster, against the first index of the cluster

    Returns:
        One row per eigenfield (kind "eigenfield") and per combination (kind "combination")
    """
    if not report.eigenfields:
        raise ValueError("Spectrum report carries no eigenfields")
    firsts = _clusters(report.eigenvalues, cluster_tol)

    def domains_of(field: ScalarField) -> int:
        return count_nodal_domains(field, tol_zero, tol_vertex, mask_radius, candidate_threshold)

    rows = []
    for j, (field, bound) in enumerate(zip(report.eigenfields, firsts), start=1):
        domains = domains_of(field)
        rows.append(CourantRow(j=j, domains=domains, bound=bound, ok=domains <= bound))

    rng = np.random.default_rng(seed)
    for first in sorted(set(firsts)):
        members = [i for i, f in enumerate(firsts) if f == first]
        if len(members) < 2:
            continue
        for _ in range(combinations):
            coeffs = rng.standard_normal(len(members))
            coeffs /= np.linalg.norm(coeffs)
            values = sum(c * report.eigenfields[i].values for c, i in zip(coeffs, members))
            domains = domains_of(ScalarField(report.eigenfields[0].grid, values))
            rows.append(CourantRow(j=members[0] + 1, domains=domains, bound=first, ok=domains <= first, kind="combination"))

    failures = [r for r in rows if not r.ok]
    if failures:
        logger.warning(f"Courant bound fails on {len(failures)} row(s)", extra={"stage": "courant"})
    return rows


# ==================== Vanishing fit ====================

def vanishing_fit(
    fields: Sequence[ScalarField],
    points: Sequence[complex],
    fit_tol: float = 1e-8,
    lattice: Optional[TorusLattice] = None,
) -> VanishingFit:
    """
    Unit combination Σ a_j v_j with v = v_x = v_y = 0 at the points

    Args:
        fields: v_1..v_n on one grid
        points: prescribed zeros on the period lattice
        fit_tol: relative least singular value below which the kernel counts as exact
        lattice: lattice whose m copies the zeros are replicated over (defaults to the field lattice)

    Returns:
        VanishingFit from the least right-singular vector of the 3k × n system

    Raises:
        TooManyPoints: 3·#points > #fields
        DuplicatePoints: two points coincide modulo the period lattice
    """
    if not fields:
        raise ValueError("vanishing_fit needs at least one field")
    grid = lat.same_grid(*fields)
    lattice = lattice or grid.lattice
    if 3 * len(points) > len(fields):
        raise TooManyPoints(
            f"{len(points)} points impose {3 * len(points)} conditions on {len(fields)} fields",
            points=len(points),
            fields=len(fields),
        )

    reduced = [complex(lattice.reduce(complex(p), sub=True)) for p in points]
    scale = abs(lattice.omega1) + abs(lattice.omega2)
    for a in range(len(reduced)):
        for b in range(a + 1, len(reduced)):
            gap = complex(lattice.reduce(reduced[a] - reduced[b], sub=True))
            near = min(abs(gap - corner) for corner in (0, *lattice.sub_generators, sum(lattice.sub_generators)))
            if near <= 1e-9 * scale:
                raise DuplicatePoints(f"Points {a} and {b} coincide modulo the lattice", first=a, second=b)

    rows = []
    for p in reduced:
        for dx, dy in ((0, 0), (1, 0), (0, 1)):
            rows.append([float(lat.interpolate(f, [p], dx, dy)[0]) for f in fields])
    matrix = np.array(rows).reshape(3 * len(reduced), len(fields))

    if matrix.size:
        _, singular, vh = linalg.svd(matrix, full_matrices=True)
        coefficients = vh[-1]
        largest = float(singular[0]) if singular.size else 0.0
        least = float(singular[-1]) if matrix.shape[0] >= matrix.shape[1] else 0.0
    else:
        coefficients = np.zeros(len(fields))
        coefficients[0] = 1.0
        largest, least = 0.0, 0.0
    nonzero = np.flatnonzero(np.abs(coefficients) > 1e-12)
    if nonzero.size and coefficients[nonzero[0]] < 0:
        coefficients = -coefficients

    residual = float(np.max(np.abs(matrix @ coefficients))) if matrix.size else 0.0
    _, w2 = lattice.sub_generators
    replicated = [complex(lattice.reduce(p + l * w2, sub=False)) for p in reduced for l in range(lattice.m)]

    return VanishingFit(
        points=[(p.real, p.imag) for p in reduced],
        replicated_points=[(p.real, p.imag) for p in replicated],
        coefficients=[float(c) for c in coefficients],
        residual=residual,
        basis_size=len(fields),
        least_singular_value=least,
        no_exact_kernel=bool(largest > 0.0 and least > fit_tol * largest),
    )


def combine(fields: Sequence[ScalarField], coefficients: Sequence[float]) -> ScalarField:
    """Σ a_j v_j"""
    grid = lat.same_grid(*fields)
    return ScalarField(grid, sum(c * f.values for c, f in zip(coefficients, fields)))


# ==================== Domain-count chain ====================

def domain_count_chain(graph: NodalGraph, points: int, m: int = 1) -> dict:
    """
    From prescribed zeros to a face count on the torus

    With 𝒱 ≥ m·#points ≥ 1, ℱ ≥ ℰ − 𝒱 and ℰ ≥ 2𝒱 it follows that ℱ ≥ 𝒱 ≥ m·#points.
    """
    V, E, F = graph.num_vertices, graph.num_edges, graph.faces
    enough_vertices = V >= m * points >= 1
    euler = F >= E - V
    edge_count = E >= 2 * V
    premises = enough_vertices and euler and edge_count
    return {
        "vertices_at_least_m_points": enough_vertices,
        "euler": euler,
        "edges_at_least_twice_vertices": edge_count,
        "premises": premises,
        "faces_at_least_m_points": F >= m * points,
        "implication_holds": (not premises) or F >= m * points,
    }


def nodal_index_bound(v: ScalarField, tol_zero: float = 1e-6) -> int:
    """Index lower bound 𝒦 − 1 ≥ (number of nodal domains) − 2 for a kernel field v"""
    return count_nodal_domains(v, tol_zero) - 2


def half_period_degrees(
    v: ScalarField,
    graph: NodalGraph,
    tol_zero: float = 1e-6,
    tol_vertex: float = 1e-3,
) -> list[dict]:
    """
    Local nodal degree of v at the four half periods

    A graph vertex within two cells gives its degree; a zero with nonvanishing
    gradient has degree 2; a nonzero value has degree 0.
    """
    grid = v.grid
    vmax = _sup(v)
    gx, gy = lat.gradient(v, check=False)
    gmax = float(np.max(np.hypot(gx.values, gy.values))) or 1.0
    out = []
    for n, w in enumerate(lat.half_periods(grid.lattice)):
        value = abs(float(lat.interpolate(v, [w])[0]))
        grad = math.hypot(float(lat.interpolate(v, [w], 1, 0)[0]), float(lat.interpolate(v, [w], 0, 1)[0]))
        vanishes = value <= tol_zero * vmax
        critical = vanishes and grad <= tol_vertex * gmax
        idx = _index_coords(grid, w)
        degree = 0
        if vanishes:
            degree = 2
            for vertex in graph.vertices:
                other = _index_coords(grid, complex(*vertex.position))
                if np.linalg.norm(_wrapped(idx - other, grid)) <= 2.0:
                    degree = vertex.degree
                    break
        out.append({"half_period": f"w{n}", "point": (w.real, w.imag), "vanishes": vanishes, "critical": critical, "degree": degree})
    return out
