"""Print the certified interval of each bundled program for k = 0, 1, 2, 4, ...

    python scripts/sweep_bounds.py [--k-max 16] [--csv]
"""

import argparse
import csv
import sys
from fractions import Fraction
from pathlib import Path

from pcfbounds import BoundsQuery, SubDist, bound_at_k, parse
from pcfbounds.bounds import k_schedule

PROGRAMS = Path(__file__).with_name("programs")
DISTS = {"random_walk": {"x": SubDist.of({1: Fraction(1, 2), 2: Fraction(1, 4)}, err=Fraction(1, 8))}}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-max", type=int, default=16)
    ap.add_argument("--csv", action="store_true")
    args = ap.parse_args()
    out = csv.writer(sys.stdout)
    if args.csv:
        out.writerow(["program", "k", "lower", "upper", "width"])
    for path in sorted(PROGRAMS.glob("*.pcf")):
        if path.stem == "binary_tree" and args.k_max > 8:
            ks = [0, *k_schedule(8)]  # the unfolding doubles at every level
        else:
            ks = [0, *k_schedule(args.k_max)]
        q = BoundsQuery(parse(path.read_text()), DISTS.get(path.stem, {}))
        for k in ks:
            lo, hi = bound_at_k(q, k)
            if args.csv:
                out.writerow([path.stem, k, lo, hi, hi - lo])
            else:
                print(f"{path.stem:<14} k={k:<3} [{float(lo):.6f}, {float(hi):.6f}]  width {float(hi - lo):.6f}")


if __name__ == "__main__":
    main()
