"""Command-line entry point: ``irs-isac <command> [options]``."""

import argparse
import json
import logging
import os
import sys

from irs_isac import costmodel, features, harness, neuralnet
from irs_isac.protocol import SystemConfig

log = logging.getLogger("irs_isac")


def load_config(path, seed=None, full=False) -> harness.ExperimentConfig:
    if path:
        with open(path, encoding="utf-8") as fh:
            exp = harness.ExperimentConfig.from_dict(json.load(fh))
    elif full:
        exp = harness.ExperimentConfig.full_scale()
    else:
        exp = harness.ExperimentConfig()
    if seed is not None:
        exp.system = exp.system.replace(seed=seed)
    return exp


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def model_path(directory, stage, pair):
    return os.path.join(directory, f"s{stage}i{pair}.isacnn")


def load_chain(system, pair, directory, stages=(1, 2, 3)):
    models = {}
    for stage in stages:
        path = model_path(directory, stage, pair)
        if not os.path.exists(path):
            raise harness.MissingModelError(f"missing model file {path}")
        models[stage] = neuralnet.load(path)
    return harness.DlChain(system, pair, models)


def cmd_simulate(args, exp):
    priors = None
    if args.models:
        priors = load_chain(exp.system, args.pair, args.models, range(1, args.stage))
    snr = args.snr if args.snr else exp.train_snr_grid_db
    ds = features.make_dataset(args.stage, args.pair, exp.system, snr, exp.V, exp.U,
                               exp.system.seed, priors)
    out = args.out or f"s{args.stage}i{args.pair}.isacds"
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    features.write_dataset(out, ds)
    log.info("wrote %d samples to %s", len(ds), out)


def cmd_train(args, exp):
    out_dir = args.out or "models"
    os.makedirs(out_dir, exist_ok=True)
    priors = None
    if args.stage > 1 and not args.ls_priors:
        priors = load_chain(exp.system, args.pair, args.models or out_dir, range(1, args.stage))
    net, hist, _ = harness.train_stage(exp, args.stage, args.pair, priors=priors)
    neuralnet.save(net, model_path(out_dir, args.stage, args.pair))
    rows = [(i + 1, tr, va) for i, (tr, va) in enumerate(zip(hist["train_mse"], hist["val_mse"]))]
    _write_text(os.path.join(out_dir, f"s{args.stage}i{args.pair}_history.csv"),
                harness.rows_csv(["epoch", "train_mse", "val_mse"], rows))


def cmd_evaluate(args, exp):
    name = args.estimator or exp.estimator
    if name == "ls":
        chain = harness.LsChain()
    else:
        chain = load_chain(exp.system, int(name[-1]), args.models or "models")
    rows = harness.run_pipeline(exp.system, {name: chain}, exp.test_snr_grid_db, exp.T_on,
                                exp.system.seed)
    _write_text(args.out, harness.pipeline_csv(rows))


def cmd_complexity(args, exp):
    rows = costmodel.cost_sweep(args.M or harness.FIG8_M, args.L or harness.FIG8_L,
                                exp.system.C_s1)
    _write_text(args.out, costmodel.sweep_csv(rows))


def cmd_figure(args, exp):
    text = harness.reproduce_figure(args.figure, exp, seed=exp.system.seed, full=args.full)
    _write_text(args.out, text)


def _global_flags(suppress):
    """Flags accepted both before and after the subcommand.

    The subcommand copies default to SUPPRESS so they do not overwrite a
    value given before the subcommand name.
    """
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (JSON)", **kw)
    common.add_argument("--seed", type=int, help="master seed (overrides the config)", **kw)
    common.add_argument("--out", help="output file, or directory for train", **kw)
    common.add_argument("-v", "--verbose", action="store_true", **kw)
    return common


def build_parser():
    common = _global_flags(suppress=True)
    p = argparse.ArgumentParser(prog="irs-isac", parents=[_global_flags(suppress=False)])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="write a training dataset file")
    s.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--pair", type=int, choices=(1, 2), required=True)
    s.add_argument("--snr", type=float, nargs="+")
    s.add_argument("--models", help="directory of earlier-stage models used as priors")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("train", parents=[common], help="train one stage network")
    s.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--pair", type=int, choices=(1, 2), required=True)
    s.add_argument("--models", help="directory holding earlier-stage models (default: --out)")
    s.add_argument("--ls-priors", action="store_true",
                   help="feed LS estimates forward instead of earlier DL models")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="NMSE versus SNR")
    s.add_argument("--estimator", choices=harness.ESTIMATORS)
    s.add_argument("--models", help="directory with s{stage}i{pair}.isacnn files")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("complexity", parents=[common], help="operation-count sweep")
    s.add_argument("--M", type=int, nargs="+")
    s.add_argument("--L", type=int, nargs="+")
    s.set_defaults(func=cmd_complexity)

    s = sub.add_parser("reproduce-figure", parents=[common], help="figure data as CSV")
    s.add_argument("figure", type=int, choices=(5, 6, 7, 8))
    s.add_argument("--full", action="store_true", help="full-scale settings (L=30, full network widths)")
    s.set_defaults(func=cmd_figure)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    exp = load_config(args.config, args.seed, full=getattr(args, "full", False))
    try:
        args.func(args, exp)
    except harness.MissingModelError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
