"""Print both sides of the investment-share condition over a concavity grid,
plus the crossing point, for the canonical partworths."""
import argparse

import numpy as np

from context_tpp.nccm import (
    CANONICAL, DEFAULT_B, assumption3_crossing, format_table_b1, table_b1,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=float, default=DEFAULT_B)
    ap.add_argument("--fine", action="store_true", help="also print a 0.05-step grid")
    args = ap.parse_args()

    print(format_table_b1(table_b1(b=args.b)))
    c = assumption3_crossing(CANONICAL, b=args.b)
    print(f"\ncrossing c* = {c:.4f}" if c is not None else "\nno crossing on (0, 1)")
    if args.fine:
        print()
        for c_val, r in table_b1(c_values=np.round(np.arange(0.05, 1.0, 0.05), 2), b=args.b):
            print(f"c={c_val:.2f}  lhs={r.lhs:10.3f}  rhs={r.rhs:10.3f}  {'holds' if r.holds else '-'}")


if __name__ == "__main__":
    main()
