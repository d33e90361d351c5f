"""
pipeline: solve → hierarchy → spectrum → nodal (→ vanishing fit) → bounds with one manifest
"""

import argparse
import re
from pathlib import Path

from cmcindex.commands.common import (
    add_config_argument,
    load_config,
    parse_point,
    solution_summary,
    solve_from_config,
)
from cmcindex.commands.nodal import analyse, analyse_fit, render
from cmcindex.errors import PropertyViolation
from cmcindex.models import BoundInputs, ScalarField, SpectrumReport
from cmcindex.services import bounds, hierarchy, nodal, spectrum
from cmcindex.services.sinh_gordon import save_field
from cmcindex.utils.artifacts import Manifest, write_json, write_text
from cmcindex.utils.fieldio import write_field
from cmcindex.utils.logger import get_context_logger

log = get_context_logger(__name__, stage="pipeline")

FIELD_PATTERN = re.compile(r"^(v|eigen)(\d+)$")


def register(subparsers) -> None:
    parser = subparsers.add_parser("pipeline", help="run the full chain from a config file")
    add_config_argument(parser)
    parser.add_argument("--out", "-o", default=None, help="output directory (overrides [pipeline] output_dir)")
    parser.set_defaults(handler=run)


def _nodal_field(name: str, jacobi: list[ScalarField], report: SpectrumReport) -> ScalarField:
    match = FIELD_PATTERN.match(name)
    if not match:
        raise ValueError(f"nodal.field must be vN or eigenN, got {name!r}")
    kind, index = match.group(1), int(match.group(2))
    pool = jacobi if kind == "v" else report.eigenfields
    if not 1 <= index <= len(pool):
        raise ValueError(f"nodal.field {name} is out of range (1..{len(pool)})")
    return pool[index - 1]


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args, {"pipeline": {"output_dir": args.out}})
    out_dir = Path(cfg.pipeline.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out_dir, "pipeline", cfg.model_dump(mode="json"))

    # Solve
    solution, branch = solve_from_config(cfg)
    u = solution.u
    save_field(solution, out_dir / "solution.cmcf")
    manifest.add(out_dir / "solution.cmcf", "field")
    summary = solution_summary(solution)
    if branch:
        summary["branch"] = [{"parameter": s.parameter, "amplitude": s.amplitude} for s in branch]
    manifest.add(write_json(summary, out_dir / "solution.json"), "solution")
    log.info(f"Solved with residual {solution.residual_norm:.3e}")

    # Hierarchy
    section = cfg.spectrum
    manifest.add(write_text("\n".join(hierarchy.dump(section.jmax)) + "\n", out_dir / "hierarchy.txt"), "hierarchy")
    jacobi = hierarchy.jacobi_fields(section.jacobi_count, u, cfg.lattice.aliasing_threshold)
    rows = []
    for j, v in enumerate(jacobi, start=1):
        path = out_dir / f"v{j}.cmcf"
        write_field(path, v)
        manifest.add(path, "field")
        rows.append({
            "j": j,
            "sup_norm": v.sup_norm,
            "kernel_residual": hierarchy.kernel_residual(v, u),
            "antisymmetry": hierarchy.antisymmetry_defect(v),
        })
    manifest.add(write_json({"fields": rows}, out_dir / "jacobi.json"), "jacobi")

    # Spectrum
    op = spectrum.JacobiOperator(u, dense_max=section.dense_max)
    report = spectrum.eigen(
        op,
        section.count,
        zero_tol=section.zero_tol,
        kernel_tol=section.kernel_tol,
        solver=section.solver,
        eig_tol=section.eig_tol,
        seed=cfg.pipeline.seed,
        kernel_fields=[v for v in jacobi if v.sup_norm > 0.0] or None,
        gram_tol=section.gram_tol,
    )
    manifest.add(write_json(report, out_dir / "spectrum.json"), "spectrum")

    # Nodal
    ncfg = cfg.nodal
    courant = nodal.courant_check(
        report,
        ncfg.tol_zero,
        ncfg.cluster_tol,
        ncfg.courant_combinations,
        cfg.pipeline.seed,
        tol_vertex=ncfg.tol_vertex,
        mask_radius=ncfg.mask_radius,
        candidate_threshold=ncfg.candidate_threshold,
    )
    courant_ok = all(row.ok for row in courant)
    manifest.add(write_json({"rows": [r.model_dump() for r in courant], "ok": courant_ok}, out_dir / "courant.json"), "courant")

    v = _nodal_field(ncfg.field, jacobi, report)
    nodal_summary, graph = analyse(v, ncfg)
    nodal_summary["field"] = ncfg.field
    manifest.add(write_json(nodal_summary, out_dir / "nodal.json"), "nodal")
    manifest.add(write_json(graph, out_dir / "nodal_graph.json"), "nodal-graph")
    render(graph, v, out_dir / "nodal.svg")
    manifest.add(out_dir / "nodal.svg", "svg")

    # Vanishing fit
    if ncfg.fit_points.strip():
        points = [parse_point(p) for p in ncfg.fit_points.split(";")]
        pool = jacobi if ncfg.fit_basis == "jacobi" else report.eigenfields
        basis = [f for f in pool if f.sup_norm > 0.0][: ncfg.fit_size or None]
        fit_summary, fit_graph, fitted = analyse_fit(basis, points, ncfg)
        fit_summary["basis"] = {"kind": ncfg.fit_basis, "size": len(basis)}
        manifest.add(write_json(fit_summary, out_dir / "fit.json"), "fit")
        render(fit_graph, fitted, out_dir / "fit.svg")
        manifest.add(out_dir / "fit.svg", "svg")
        log.info(f"Fitted {len(points)} point(s) over {len(basis)} {ncfg.fit_basis} field(s)")

    # Bounds
    bcfg = cfg.bounds
    area = bounds.surface_area(u) if bcfg.area_from_solution else None
    inputs = BoundInputs(
        g=bcfg.g,
        m=bcfg.m or u.grid.lattice.m,
        d_zero=bcfg.d_zero,
        c_tilde=bcfg.c_tilde,
        c=bcfg.c,
        area=area,
    )
    bound_report = bounds.compare(inputs, report)
    manifest.add(write_json(bound_report, out_dir / "bounds.json"), "bounds")
    manifest.add(write_text(bounds.format_text(bound_report), out_dir / "bounds.txt"), "bounds-text")

    euler = nodal_summary["euler"]
    violations = []
    if not courant_ok:
        violations.append("courant")
    if euler["applicable"] and not euler["holds"]:
        violations.append("euler")

    manifest.record(
        aliasing_threshold=cfg.lattice.aliasing_threshold,
        newton_tol=cfg.solve.newton_tol,
        zero_tol=report.zero_tol,
        kernel_tol=section.kernel_tol,
        eig_tol=section.eig_tol,
        gram_tol=section.gram_tol,
        tol_zero=ncfg.tol_zero,
        tol_vertex=ncfg.tol_vertex,
        mask_radius=ncfg.mask_radius,
        candidate_threshold=ncfg.candidate_threshold,
        cluster_tol=ncfg.cluster_tol,
        fit_tol=ncfg.fit_tol,
        c_value=inputs.c_value,
    )
    manifest.results = {
        "residual_norm": solution.residual_norm,
        "index_interval": [report.index_lower, report.index_upper],
        "courant_ok": courant_ok,
        "euler": euler["label"],
        "domains": nodal_summary["domains"],
        "violations": violations,
    }
    manifest.write()

    if violations:
        raise PropertyViolation(f"Checked properties failed: {', '.join(violations)}", violations=violations)
    return 0
