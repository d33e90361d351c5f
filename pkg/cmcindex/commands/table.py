"""
table: CSV of every closed-form bound over a range of g
"""

import argparse
import sys

from cmcindex.services import bounds
from cmcindex.utils.artifacts import csv_text, write_text


def register(subparsers) -> None:
    parser = subparsers.add_parser("table", help="CSV of bounds over a g-range")
    parser.add_argument("--g-min", type=int, default=2)
    parser.add_argument("--g-max", type=int, default=20)
    parser.add_argument("--m", type=int, nargs="+", default=[1, 2, 3], help="multiplicities")
    parser.add_argument("--c", type=float, default=1.0, help="area-bound constant")
    parser.add_argument("--out", "-o", default=None, help="CSV file (stdout when omitted)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.g_max < args.g_min:
        raise ValueError(f"Empty g-range [{args.g_min}, {args.g_max}]")
    rows = bounds.table(range(args.g_min, args.g_max + 1), args.m, args.c)
    text = csv_text(rows, bounds.TABLE_COLUMNS)
    if args.out:
        write_text(text, args.out)
    else:
        sys.stdout.write(text)
    return 0
