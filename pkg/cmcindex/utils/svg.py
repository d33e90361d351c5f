"""
SVG rendering of nodal graphs

Cells of the sampled field are filled by sign and the fundamental
parallelogram is outlined. Edges and closed loops are drawn as polylines
(split where they wrap around the torus) and vertices as dots labelled with
their degree. SVG y points down, so y is negated.
"""

from pathlib import Path
from typing import Optional

import numpy as np
import svgwrite

from cmcindex.models import NodalGraph, TorusLattice

EDGE_COLOR = "#1f4e79"
LOOP_COLOR = "#2e7d32"
VERTEX_COLOR = "#c62828"
POSITIVE_FILL = "#f8d3cf"
NEGATIVE_FILL = "#d2e3f3"


def _split_wrapped(points: list[tuple[float, float]], jump: float) -> list[list[tuple[float, float]]]:
    """Break a polyline wherever consecutive points are further apart than jump"""
    pieces: list[list[tuple[float, float]]] = [[]]
    for point in points:
        current = pieces[-1]
        if current and np.hypot(point[0] - current[-1][0], point[1] - current[-1][1]) > jump:
            pieces.append([])
        pieces[-1].append(point)
    return [p for p in pieces if len(p) > 1]


def _flip(points) -> list[tuple[float, float]]:
    return [(round(float(x), 6), round(-float(y), 6)) for x, y in points]


def _sign_runs(signs: np.ndarray) -> list[tuple[int, int, int, bool]]:
    """Maximal runs (k, j0, j1, positive) of equal sign along each row"""
    runs = []
    for k, row in enumerate(np.asarray(signs, dtype=bool)):
        j0 = 0
        for j in range(1, row.size + 1):
            if j == row.size or row[j] != row[j0]:
                runs.append((k, j0, j, bool(row[j0])))
                j0 = j
    return runs


def render_graph(
    graph: NodalGraph,
    lattice: TorusLattice,
    signs: Optional[np.ndarray] = None,
    width: int = 600,
) -> str:
    """
    SVG document for a nodal graph over the fundamental domain of the lattice

    Args:
        graph: extracted nodal graph
        lattice: surface lattice the graph lives on
        signs: v >= 0 per sample, shape (ny, nx); sample (k, j) fills the cell
            [j, j + 1] x [k, k + 1] in index units
        width: pixel width; the height follows the aspect ratio

    Returns:
        SVG text, deterministic for a given graph
    """
    w1, w2 = lattice.omega1, lattice.omega2
    corners = [0j, w1, w1 + w2, w2]
    xs = [c.real for c in corners]
    ys = [-c.imag for c in corners]
    pad = 0.03 * max(max(xs) - min(xs), max(ys) - min(ys))
    x0, y0 = min(xs) - pad, min(ys) - pad
    span_x, span_y = max(xs) - min(xs) + 2 * pad, max(ys) - min(ys) + 2 * pad
    height = max(1, int(round(width * span_y / span_x)))
    stroke = span_x / width * 1.5

    dwg = svgwrite.Drawing(
        size=(f"{width}px", f"{height}px"),
        viewBox=f"{x0:.6f} {y0:.6f} {span_x:.6f} {span_y:.6f}",
    )

    if signs is not None:
        ny, nx = np.shape(signs)
        faces = dwg.g(id="faces", stroke="none")
        for k, j0, j1, positive in _sign_runs(signs):
            cell = [(j0 / nx) * w1 + (k / ny) * w2, (j1 / nx) * w1 + (k / ny) * w2,
                    (j1 / nx) * w1 + ((k + 1) / ny) * w2, (j0 / nx) * w1 + ((k + 1) / ny) * w2]
            fill = POSITIVE_FILL if positive else NEGATIVE_FILL
            faces.add(dwg.polygon(_flip([(c.real, c.imag) for c in cell]), fill=fill))
        dwg.add(faces)
    dwg.add(dwg.polygon(
        _flip([(c.real, c.imag) for c in corners]),
        fill="none", stroke="#888888", stroke_width=stroke, stroke_dasharray=f"{4 * stroke},{2 * stroke}",
    ))

    jump = 0.5 * min(abs(w1), abs(w2))
    for edge in graph.edges:
        for piece in _split_wrapped(edge.points, jump):
            dwg.add(dwg.polyline(_flip(piece), fill="none", stroke=EDGE_COLOR, stroke_width=stroke))
    for loop in graph.closed_loops:
        closed = list(loop) + list(loop[:1])
        for piece in _split_wrapped(closed, jump):
            dwg.add(dwg.polyline(_flip(piece), fill="none", stroke=LOOP_COLOR, stroke_width=stroke))

    radius = 3 * stroke
    for vertex in graph.vertices:
        (cx, cy), = _flip([vertex.position])
        dwg.add(dwg.circle(center=(cx, cy), r=radius, fill=VERTEX_COLOR))
        dwg.add(dwg.text(
            str(vertex.degree), insert=(cx + 1.5 * radius, cy - 1.5 * radius),
            font_size=6 * stroke, fill=VERTEX_COLOR,
        ))

    counts = graph.counts
    caption = f"F={counts['F']} E={counts['E']} V={counts['V']} r={counts['r']}"
    dwg.add(dwg.text(caption, insert=(x0 + pad / 3, y0 + span_y - pad / 3), font_size=8 * stroke, fill="#333333"))
    return dwg.tostring()


def write_svg(
    graph: NodalGraph,
    lattice: TorusLattice,
    path: str | Path,
    signs: Optional[np.ndarray] = None,
    width: int = 600,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_graph(graph, lattice, signs, width), encoding="utf-8")
