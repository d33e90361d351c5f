"""
spectrum: low eigenvalues of the Jacobi operator and the index interval
"""

import argparse

from cmcindex.commands.common import add_config_argument, emit, load_config
from cmcindex.services import hierarchy, spectrum
from cmcindex.services.sinh_gordon import load_field
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("spectrum", help="eigenvalues of L and the index interval")
    parser.add_argument("field", help="CMCF solution u")
    add_config_argument(parser)
    parser.add_argument("--count", "-n", type=int, default=None, help="number of eigenvalues")
    parser.add_argument("--solver", choices=["lanczos", "lobpcg"], default=None)
    parser.add_argument("--zero-tol", type=float, default=None)
    parser.add_argument("--resolve", action="store_true", help="grow the count until the spectrum passes zero")
    parser.add_argument("--witness", type=int, default=0, help="Gram rank of the first N Jacobi fields")
    parser.add_argument("--out", "-o", default=None, help="SpectrumReport JSON (stdout when omitted)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args, {"spectrum": {"count": args.count, "solver": args.solver, "zero_tol": args.zero_tol}})
    section = cfg.spectrum
    solution = load_field(args.field)

    kernel_fields = hierarchy.jacobi_fields(args.witness, solution.u) if args.witness > 0 else None
    op = spectrum.JacobiOperator(solution.u, dense_max=section.dense_max)
    options = dict(
        zero_tol=section.zero_tol,
        kernel_tol=section.kernel_tol,
        solver=section.solver,
        eig_tol=section.eig_tol,
        seed=cfg.pipeline.seed,
        kernel_fields=kernel_fields,
        gram_tol=section.gram_tol,
    )
    if args.resolve:
        report = spectrum.resolve_spectrum(op, section.count, **options)
    else:
        report = spectrum.eigen(op, section.count, **options)

    logger.info(
        f"Index interval [{report.index_lower}, {report.index_upper}] from {len(report.eigenvalues)} eigenvalues",
        extra={"stage": "spectrum"},
    )
    emit(report, args.out)
    return 0
