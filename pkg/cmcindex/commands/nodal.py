"""
nodal: nodal graph, Euler relation and nodal domains of a field

With --points, the fields form a basis: the unit combination vanishing to
first order at the points is fitted and analysed instead.
"""

import argparse
from pathlib import Path
from typing import Sequence

from cmcindex.commands.common import add_config_argument, emit, load_config, parse_point
from cmcindex.config import NodalSection
from cmcindex.errors import PropertyViolation
from cmcindex.models import NodalGraph, ScalarField
from cmcindex.services import nodal
from cmcindex.utils.fieldio import read_field
from cmcindex.utils.logger import get_logger
from cmcindex.utils.svg import write_svg

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("nodal", help="nodal graph and Euler check of a field")
    parser.add_argument("fields", nargs="+", help="CMCF field (or basis fields with --points)")
    add_config_argument(parser)
    parser.add_argument("--points", nargs="*", default=None, help="prescribed zeros as x,y")
    parser.add_argument("--svg", default=None, help="SVG rendering of the graph")
    parser.add_argument("--graph", default=None, help="NodalGraph JSON")
    parser.add_argument("--out", "-o", default=None, help="summary JSON (stdout when omitted)")
    parser.add_argument("--tol-zero", type=float, default=None)
    parser.add_argument("--tol-vertex", type=float, default=None)
    parser.add_argument("--mask-radius", type=float, default=None)
    parser.add_argument("--genus", type=int, default=None, help="genus of the surface (1 for a torus)")
    parser.set_defaults(handler=run)


def analyse(v: ScalarField, section: NodalSection) -> tuple[dict, NodalGraph]:
    """Graph, Euler relation, domain count and half-period degrees of v"""
    graph = nodal.extract_graph(v, section.tol_zero, section.tol_vertex, section.mask_radius, section.candidate_threshold)
    euler = nodal.euler_check(graph, section.genus_m)
    domains = nodal.count_nodal_domains(
        v, section.tol_zero, section.tol_vertex, section.mask_radius, section.candidate_threshold
    )
    summary = {
        "counts": graph.counts,
        "euler": euler.model_dump(),
        "domains": domains,
        "domains_match_faces": domains == graph.faces,
        "nodal_index_bound": domains - 2,
        "degree_violations": graph.degree_violations,
        "half_periods": nodal.half_period_degrees(v, graph, section.tol_zero, section.tol_vertex),
    }
    return summary, graph


def analyse_fit(
    fields: Sequence[ScalarField],
    points: Sequence[complex],
    section: NodalSection,
) -> tuple[dict, NodalGraph, ScalarField]:
    """Fit the unit combination vanishing at the points, then analyse it"""
    fit = nodal.vanishing_fit(fields, points, section.fit_tol)
    v = nodal.combine(fields, fit.coefficients)
    summary, graph = analyse(v, section)
    summary["fit"] = fit.model_dump(by_alias=True)
    summary["chain"] = nodal.domain_count_chain(graph, len(fit.points), v.grid.lattice.m)
    return summary, graph, v


def render(graph: NodalGraph, v: ScalarField, path: str | Path) -> None:
    write_svg(graph, v.grid.lattice, path, signs=nodal.sign_mask(v))


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args, {"nodal": {
        "tol_zero": args.tol_zero,
        "tol_vertex": args.tol_vertex,
        "mask_radius": args.mask_radius,
        "genus_m": args.genus,
    }})
    section = cfg.nodal
    fields = [read_field(path) for path in args.fields]

    if args.points is not None:
        points = [parse_point(p) for p in args.points]
        summary, graph, v = analyse_fit(fields, points, section)
    else:
        if len(fields) != 1:
            raise ValueError("Several fields need --points to be combined")
        v = fields[0]
        summary, graph = analyse(v, section)

    if args.graph:
        emit(graph, args.graph)
    if args.svg:
        render(graph, v, args.svg)
    emit(summary, args.out)

    euler = summary["euler"]
    if euler["applicable"] and not euler["holds"]:
        raise PropertyViolation(
            f"Euler inequality violated: {euler['lhs']} < {euler['rhs']}",
            lhs=euler["lhs"],
            rhs=euler["rhs"],
        )
    return 0
