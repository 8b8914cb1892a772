"""Compare certified bounds with Monte Carlo on randomly generated loops.

    python scripts/cross_validate_corpus.py [--terms 30] [--samples 5000] [--seed 0]

Exits non-zero if any empirical frequency falls outside the 5-sigma band.
"""

import argparse
import random
import sys

from pcfbounds import BoundsQuery, cross_validate
from pcfbounds.gen import fix_term
from pcfbounds.syntax import render


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--terms", type=int, default=30)
    ap.add_argument("--samples", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=4)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    misses = 0
    for i in range(args.terms):
        t = fix_term(rng)
        cv = cross_validate(BoundsQuery(t, k=args.k), args.samples, seed=args.seed + i)
        misses += not cv.ok
        flag = "ok  " if cv.ok else "MISS"
        print(
            f"{flag} [{float(cv.lower):.4f}, {float(cv.upper):.4f}] "
            f"p_hat={cv.empirical:.4f} sigma={cv.sigma:.4f} timeouts={cv.timeouts}  {render(t)[:70]}"
        )
    print(f"{args.terms - misses}/{args.terms} inside the band")
    return 1 if misses else 0


if __name__ == "__main__":
    sys.exit(main())
