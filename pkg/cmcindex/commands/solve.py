"""
solve: compute a sinh-Gordon solution and write it as CMCF
"""

import argparse

from cmcindex.commands.common import add_config_argument, emit, load_config, output_path, solution_summary, solve_from_config
from cmcindex.services.sinh_gordon import save_field
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="solve the sinh-Gordon equation on a torus")
    add_config_argument(parser)
    parser.add_argument("--out", "-o", default=None, help="output CMCF file")
    parser.add_argument("--summary", default=None, help="JSON summary file (stdout when omitted)")
    parser.add_argument("--method", choices=["trivial", "newton", "oned", "continuation", "file"], default=None)
    parser.add_argument("--energy", type=float, default=None, help="orbit energy for the 1-D solution")
    parser.add_argument("--nx", type=int, default=None)
    parser.add_argument("--ny", type=int, default=None)
    parser.add_argument("--seed-file", default=None, help="CMCF input for method=file")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args, {
        "solve": {"method": args.method, "energy": args.energy, "seed_file": args.seed_file},
        "lattice": {"nx": args.nx, "ny": args.ny},
    })
    solution, branch = solve_from_config(cfg)

    out = output_path(args.out, "solution.cmcf")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_field(solution, out)
    logger.info(f"Solution written to {out}", extra={"stage": "solve"})

    summary = {"field": str(out), **solution_summary(solution)}
    if branch:
        summary["branch"] = [
            {"parameter": s.parameter, "amplitude": s.amplitude, "residual_norm": s.residual_norm}
            for s in branch
        ]
    emit(summary, args.summary)
    return 0
