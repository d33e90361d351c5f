"""
bounds: closed-form index lower bounds, optionally against a solution and its spectrum
"""

import argparse
import json
import sys
from pathlib import Path

from cmcindex.commands.common import emit
from cmcindex.models import BoundInputs, SpectrumReport
from cmcindex.services import bounds
from cmcindex.services.sinh_gordon import load_field
from cmcindex.utils.artifacts import write_text
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("bounds", help="index lower bounds for spectral genus g")
    parser.add_argument("--g", type=int, required=True, help="spectral genus (asserted, never verified)")
    parser.add_argument("--m", type=int, default=1, help="sublattice multiplicity")
    parser.add_argument("--d-zero", action="store_true", help="Jacobi fields vanish at the half periods")
    parser.add_argument("--c-tilde", type=float, default=1e7, help="Korevaar constant")
    parser.add_argument("--c", type=float, default=None, help="area-bound constant (default π/(4·C̃))")
    area = parser.add_mutually_exclusive_group()
    area.add_argument("--area", type=float, default=None, help="surface area")
    area.add_argument("--area-from", default=None, help="CMCF solution whose area ∫e^u is used")
    parser.add_argument("--spectrum", default=None, help="SpectrumReport JSON to compare against")
    parser.add_argument("--out", "-o", default=None, help="BoundReport JSON (stdout when omitted)")
    parser.add_argument("--text", default=None, help="aligned text table ('-' for stdout)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    area = args.area
    if args.area_from:
        area = bounds.surface_area(load_field(args.area_from).u)

    spectrum = None
    if args.spectrum:
        data = json.loads(Path(args.spectrum).read_text(encoding="utf-8"))
        spectrum = SpectrumReport.model_validate(data)

    inputs = BoundInputs(g=args.g, m=args.m, d_zero=args.d_zero, c_tilde=args.c_tilde, c=args.c, area=area)
    report = bounds.compare(inputs, spectrum)

    if args.text == "-":
        sys.stdout.write(bounds.format_text(report))
    elif args.text:
        write_text(bounds.format_text(report), args.text)
    if args.text != "-" or args.out:
        emit(report, args.out)
    return 0
