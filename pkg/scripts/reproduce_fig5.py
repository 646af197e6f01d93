"""NMSE versus SNR for LS and both DL input types, written as CSV.

    python3 scripts/reproduce_fig5.py --out results/fig5.csv [--full] [--seed 0]
"""

import argparse
import logging
import os
import time

from irs_isac.harness import ExperimentConfig, reproduce_figure


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/fig5.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true", help="L=30, V=1000, U=10, T_on=1000")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    exp = ExperimentConfig.full_scale() if args.full else ExperimentConfig()
    t0 = time.time()
    text = reproduce_figure(5, exp, seed=args.seed, full=args.full)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w", newline="\n") as fh:
        fh.write(text)
    logging.info("wrote %s in %.1f s", args.out, time.time() - t0)


if __name__ == "__main__":
    main()
