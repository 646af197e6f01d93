"""Operation counts for every estimator over an (M, L) grid, as CSV on stdout."""

import argparse
import sys

from irs_isac.costmodel import cost_sweep, sweep_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--M", type=int, nargs="+", default=list(range(2, 9)))
    p.add_argument("--L", type=int, nargs="+", default=list(range(5, 31, 5)))
    p.add_argument("--C1", type=int, default=1, help="stage-1 sub-frames")
    args = p.parse_args()
    sys.stdout.write(sweep_csv(cost_sweep(args.M, args.L, args.C1)))


if __name__ == "__main__":
    main()
