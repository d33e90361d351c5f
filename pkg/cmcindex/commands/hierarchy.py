"""
hierarchy: dump ρ_j and evaluate Jacobi fields on a solution
"""

import argparse
import sys
from pathlib import Path

from cmcindex.commands.common import emit
from cmcindex.services import hierarchy
from cmcindex.services.sinh_gordon import load_field
from cmcindex.utils.artifacts import write_text
from cmcindex.utils.fieldio import write_field
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("hierarchy", help="symbolic ρ_j and Jacobi fields v_j")
    parser.add_argument("--jmax", type=int, default=hierarchy.DEFAULT_JMAX, help="largest recursion index")
    parser.add_argument("--dump", default=None, help="write the ρ_j text here ('-' for stdout)")
    parser.add_argument("--field", default=None, help="CMCF solution to evaluate the fields on")
    parser.add_argument("--count", type=int, default=3, help="number of Jacobi fields v_1..v_count")
    parser.add_argument("--out", "-o", default=None, help="directory for v_j fields and the residual report")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.jmax < 2:
        raise ValueError(f"--jmax must be at least 2, got {args.jmax}")
    text = "\n".join(hierarchy.dump(args.jmax)) + "\n"
    if args.dump == "-" or (args.dump is None and args.field is None):
        sys.stdout.write(text)
    elif args.dump:
        write_text(text, args.dump)

    if args.field is None:
        return 0

    solution = load_field(args.field)
    fields = hierarchy.jacobi_fields(args.count, solution.u)
    out_dir = Path(args.out) if args.out else None
    rows = []
    for j, v in enumerate(fields, start=1):
        row = {
            "j": j,
            "rho": hierarchy.jacobi_poly_index(j),
            "sup_norm": v.sup_norm,
            "kernel_residual": hierarchy.kernel_residual(v, solution.u),
            "antisymmetry_defect": hierarchy.antisymmetry_defect(v),
        }
        if out_dir is not None:
            path = out_dir / f"v{j}.cmcf"
            write_field(path, v)
            row["field"] = path.name
        rows.append(row)
        logger.info(
            f"v_{j}: sup {row['sup_norm']:.3e}, kernel residual {row['kernel_residual']:.3e}",
            extra={"stage": "hierarchy"},
        )

    report = {"jmax": args.jmax, "solution_residual": solution.residual_norm, "fields": rows}
    emit(report, str(out_dir / "jacobi.json") if out_dir is not None else None)
    return 0
