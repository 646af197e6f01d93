"""Desk-scale check of the stage-1 trend: DL type 2 against LS for b and f.

Trains one DE-CNN on 2,000 pooled samples (SNR 10, 15, 20 dB) and prints
the NMSE of both estimators on a few test SNRs.
"""

import argparse

from irs_isac.harness import ExperimentConfig, LsChain, run_pipeline, train_estimators
from irs_isac.neuralnet import TrainConfig
from irs_isac.protocol import SystemConfig


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--snr", type=float, nargs="+", default=[0.0, 5.0, 10.0, 15.0, 20.0])
    args = p.parse_args()

    exp = ExperimentConfig(system=SystemConfig(M=4, L=8), V=400, U=5,
                           train=TrainConfig(max_epochs=200, patience=5))
    chains = train_estimators(exp, pair_types=(2,), stages=(1,), seed=args.seed)
    chains["ls"] = LsChain()
    rows = run_pipeline(exp.system, chains, args.snr, args.trials, seed=args.seed, stages=(1,))
    table = {}
    for snr, name, ch, val in rows:
        table.setdefault((snr, ch), {})[name] = val
    print(f"{'SNR':>6} {'ch':>3} {'LS':>10} {'DL-type2':>10} {'ratio':>7}")
    for (snr, ch), v in sorted(table.items()):
        print(f"{snr:6.1f} {ch:>3} {v['ls']:10.4g} {v['dl-type2']:10.4g} "
              f"{v['dl-type2'] / v['ls']:7.3f}")


if __name__ == "__main__":
    main()
