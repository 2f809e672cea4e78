"""Recompute the summary table of worst-case ratios.

    python scripts/reproduce_table.py --sweep-max 8

Every cell is recomputed from scratch and compared with its known value; the
script exits with status 2 if any cell disagrees.
"""
import argparse
import sys

from facloc.cli import format_table, report_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweep-max", type=int, default=8, help="largest circle in the LP row")
    ap.add_argument("--mode", choices=["rational", "float"], default="rational")
    args = ap.parse_args(argv)
    cells = report_table(args.sweep_max, mode=args.mode)
    print(format_table(cells))
    return 0 if all(c.verified for c in cells) else 2


if __name__ == "__main__":
    sys.exit(main())
