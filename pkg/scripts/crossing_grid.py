"""Crossing concavity as a function of the logit scale b."""
import argparse
import json

import numpy as np

from context_tpp.nccm import CANONICAL, assumption3_crossing


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b-min", type=float, default=0.01)
    ap.add_argument("--b-max", type=float, default=0.2)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--json-out")
    args = ap.parse_args()

    rows = []
    for b in np.linspace(args.b_min, args.b_max, args.steps):
        c = assumption3_crossing(CANONICAL, b=float(b), tol=1e-8)
        rows.append({"b": float(b), "crossing": c})
        print(f"b={b:.4f}  c*={'none' if c is None else f'{c:.5f}'}")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
