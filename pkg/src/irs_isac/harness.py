"""Experiment orchestration: chained estimators, training, NMSE sweeps, figures."""

import csv
import io
import logging
from dataclasses import dataclass, field, asdict, fields

import numpy as np

from irs_isac import costmodel
from irs_isac.airsim import observe_all
from irs_isac.channels import realize
from irs_isac.cxmat import frobenius
from irs_isac.features import (LsPriors, build_input, fit_preprocessing, input_length,
                               make_dataset, postprocess, preprocess, standardize_apply,
                               target_length)
from irs_isac.lsbase import ls_stage3
from irs_isac.neuralnet import TrainConfig, build_de_cnn, build_re_cnn, forward, train
from irs_isac.protocol import SystemConfig, build_plan

log = logging.getLogger(__name__)

CHANNELS = ("b", "f", "Gu", "Gt")
ESTIMATORS = ("ls", "dl-type1", "dl-type2")
DEFAULT_TEST_GRID = tuple(np.arange(-10.0, 20.0 + 1e-9, 2.5))

DESK_RE_SIZES = {"filters": [8, 4], "hidden": [120, 180]}
FULL_DE_SIZES = {"filters": 128, "hidden": 200}
FULL_RE_SIZES = {"filters": [128, 64], "hidden": [600, 900]}


class MissingModelError(FileNotFoundError):
    pass


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    train_snr_grid_db: list = field(default_factory=lambda: [10.0, 15.0, 20.0])
    test_snr_grid_db: list = field(default_factory=lambda: list(DEFAULT_TEST_GRID))
    V: int = 200
    U: int = 5
    T_on: int = 200
    estimator: str = "ls"
    figure: int | None = None
    out: str = "out"
    pooled: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    de_sizes: dict = field(default_factory=lambda: dict(FULL_DE_SIZES))
    re_sizes: dict = field(default_factory=lambda: dict(DESK_RE_SIZES))

    def __post_init__(self):
        if isinstance(self.system, dict):
            self.system = SystemConfig(**self.system)
        if isinstance(self.train, dict):
            self.train = TrainConfig(**self.train)
        if not self.train_snr_grid_db or not self.test_snr_grid_db:
            raise ValueError("SNR grids must be non-empty")
        if self.T_on < 1 or self.V < 1 or self.U < 1:
            raise ValueError("V, U and T_on must be positive")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def full_scale(cls, **kw):
        """Full-scale settings: L=30, V=1000, U=10, T_on=1000, full network widths."""
        base = dict(system=SystemConfig(M=4, L=30), V=1000, U=10, T_on=1000,
                    de_sizes=dict(FULL_DE_SIZES), re_sizes=dict(FULL_RE_SIZES))
        base.update(kw)
        return cls(**base)

    def to_dict(self):
        d = asdict(self)
        d["system"] = self.system.to_dict()
        return d


def nmse(estimated, truth) -> float:
    estimated, truth = np.asarray(estimated), np.asarray(truth)
    if estimated.shape != truth.shape:
        raise ValueError(f"shape mismatch {estimated.shape} vs {truth.shape}")
    denom = frobenius(truth) ** 2
    if denom == 0:
        raise ZeroDivisionError("true channel has zero norm")
    return frobenius(estimated - truth) ** 2 / denom


class LsChain(LsPriors):
    name = "ls"

    def stage3(self, obs, plan, b_hat, f_hat, Gu_hat):
        return ls_stage3(obs, plan, b_hat, f_hat, Gu_hat)


class DlChain:
    """Trained networks for some prefix of the three stages, one input type."""

    def __init__(self, config: SystemConfig, pair_type: int, models=None):
        self.config = config
        self.pair_type = pair_type
        self.models = dict(models or {})
        self.name = f"dl-type{pair_type}"

    def _predict(self, stage, x):
        try:
            net = self.models[stage]
        except KeyError:
            raise MissingModelError(f"no stage-{stage} model for type {self.pair_type}") from None
        xs = standardize_apply(x, net.input_mean, net.input_std)
        return postprocess(forward(net, xs), stage, self.config.M, self.config.L, net.delta)

    def stage1(self, obs, plan):
        return self._predict(1, build_input(1, self.pair_type, obs, plan))

    def stage2(self, obs, plan, f_hat):
        return self._predict(2, build_input(2, self.pair_type, obs, plan, f_hat=f_hat))

    def stage3(self, obs, plan, b_hat, f_hat, Gu_hat):
        x = build_input(3, self.pair_type, obs, plan, b_hat=b_hat, f_hat=f_hat, Gu_hat=Gu_hat)
        return self._predict(3, x)


class NearestSnrChain:
    """Dispatch to the chain trained at the training SNR closest to the test SNR."""

    def __init__(self, chains: dict):
        self.chains = chains
        self.name = next(iter(chains.values())).name

    def _pick(self, obs):
        key = min(self.chains, key=lambda s: abs(s - obs.snr_db))
        return self.chains[key]

    def stage1(self, obs, plan):
        return self._pick(obs).stage1(obs, plan)

    def stage2(self, obs, plan, f_hat):
        return self._pick(obs).stage2(obs, plan, f_hat)

    def stage3(self, obs, plan, b_hat, f_hat, Gu_hat):
        return self._pick(obs).stage3(obs, plan, b_hat, f_hat, Gu_hat)


def _seed(*parts) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) for p in parts])


def new_network(exp: ExperimentConfig, stage, pair_type, seed):
    sys_cfg = exp.system
    n_in = input_length(stage, pair_type, sys_cfg.M, sys_cfg.L, sys_cfg.spans)
    n_out = target_length(stage, sys_cfg.M, sys_cfg.L)
    if stage == 1:
        return build_de_cnn(n_in, n_out, seed=seed, **exp.de_sizes)
    return build_re_cnn(n_in, n_out, filters=tuple(exp.re_sizes["filters"]),
                        hidden=tuple(exp.re_sizes["hidden"]), seed=seed)


def split_by_original(ds, fraction, seed):
    """Hold out whole originals (with all their augmented copies) for validation."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(ds.v_count)
    n_val = max(1, int(round(fraction * ds.v_count)))
    if n_val >= ds.v_count:
        raise ValueError("need at least two originals to split")
    val_v = np.sort(order[:n_val])
    mask = np.zeros(len(ds), dtype=bool)
    for v in val_v:
        mask[v * ds.u_count:(v + 1) * ds.u_count] = True
    return ds.subset(np.flatnonzero(~mask)), ds.subset(np.flatnonzero(mask))


def train_stage(exp: ExperimentConfig, stage, pair_type, priors=None, snr_grid=None, seed=None):
    """Generate the stage dataset, preprocess it and fit one network.

    Returns ``(network, history, dataset)``; the network carries its input
    statistics and output scale.
    """
    seed = exp.system.seed if seed is None else seed
    grid = exp.train_snr_grid_db if snr_grid is None else snr_grid
    ds = make_dataset(stage, pair_type, exp.system, grid, exp.V, exp.U,
                      int(_seed(seed, 1, stage, pair_type).generate_state(1)[0]), priors)
    tr, va = split_by_original(ds, exp.train.validation_fraction,
                               _seed(seed, 2, stage, pair_type))
    fit_preprocessing(tr, exp.system.delta)
    Xt, Yt = preprocess(tr, tr.input_mean, tr.input_std, tr.delta)
    Xv, Yv = preprocess(va, tr.input_mean, tr.input_std, tr.delta)
    net = new_network(exp, stage, pair_type, int(_seed(seed, 3, stage, pair_type).generate_state(1)[0]))
    cfg = TrainConfig(**{**asdict(exp.train), "seed": int(_seed(seed, 4, stage, pair_type).generate_state(1)[0])})
    net, hist = train(net, (Xt, Yt), (Xv, Yv), cfg, log=log.debug)
    net.input_mean, net.input_std, net.delta = tr.input_mean, tr.input_std, tr.delta
    log.info("trained S%dI%d: %d epochs, best val MSE %.4e", stage, pair_type,
             hist["epochs"], hist["best_val_mse"])
    return net, hist, ds


def train_chain(exp: ExperimentConfig, pair_type, snr_grid=None, stages=(1, 2, 3), seed=None):
    """Train stages in order, feeding each stage's estimates into the next stage's data."""
    chain = DlChain(exp.system, pair_type)
    histories = {}
    for stage in stages:
        net, hist, _ = train_stage(exp, stage, pair_type, priors=chain, snr_grid=snr_grid, seed=seed)
        chain.models[stage] = net
        histories[stage] = hist
    return chain, histories


def train_estimators(exp: ExperimentConfig, pair_types=(1, 2), stages=(1, 2, 3), seed=None):
    """DL chains for each input type, pooled over the training grid or one per SNR."""
    out = {}
    for k in pair_types:
        if exp.pooled:
            out[f"dl-type{k}"] = train_chain(exp, k, stages=stages, seed=seed)[0]
        else:
            per = {snr: train_chain(exp, k, snr_grid=[snr], stages=stages, seed=seed)[0]
                   for snr in exp.train_snr_grid_db}
            out[f"dl-type{k}"] = NearestSnrChain(per)
    return out


def estimate_all(chain, obs, plan, stages=(1, 2, 3)):
    est = {}
    b_hat, f_hat = chain.stage1(obs[0], plan)
    est["b"], est["f"] = b_hat, f_hat
    if 2 in stages:
        est["Gu"] = chain.stage2(obs[1], plan, f_hat)
    if 3 in stages:
        est["Gt"] = chain.stage3(obs[2], plan, b_hat, f_hat, est["Gu"])
    return est


def run_pipeline(system: SystemConfig, chains: dict, snr_grid, T_on, seed=0, stages=(1, 2, 3)):
    """Average NMSE per (SNR, estimator, channel) over ``T_on`` trials.

    Every estimator sees the same channel and noise draws. Channel draws are
    also shared across SNR points.
    """
    plan = build_plan(system)
    acc = {}
    for i, snr in enumerate(snr_grid):
        for t in range(T_on):
            chans = realize(system, np.random.default_rng(_seed(seed, 10, t)))
            obs = observe_all(system, plan, chans, snr, np.random.default_rng(_seed(seed, 11, i, t)))
            truth = chans.sac()
            for name, chain in chains.items():
                for ch, est in estimate_all(chain, obs, plan, stages).items():
                    key = (float(snr), name, ch)
                    acc[key] = acc.get(key, 0.0) + nmse(est, truth[ch])
    return [(snr, name, ch, total / T_on) for (snr, name, ch), total in acc.items()]


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def pipeline_csv(rows) -> str:
    return rows_csv(["snr_db", "estimator", "channel", "nmse"], rows)


def _chains_for(exp, estimators, seed, snr_grid=None):
    chains = {}
    if "ls" in estimators:
        chains["ls"] = LsChain()
    pairs = [int(e[-1]) for e in estimators if e.startswith("dl")]
    if pairs:
        if snr_grid is not None:
            exp = ExperimentConfig(**{**exp.__dict__, "train_snr_grid_db": list(snr_grid)})
        chains.update(train_estimators(exp, pairs, seed=seed))
    return chains


FIG6_L = {"desk": [4, 8], "full": [5, 10, 15, 20, 25, 30]}
FIG7_M = {"desk": [2, 4], "full": [2, 4, 6, 8]}
FIG8_L = list(range(5, 31, 5))
FIG8_M = list(range(2, 9))


def figure5(exp: ExperimentConfig, seed=0, estimators=ESTIMATORS):
    chains = _chains_for(exp, estimators, seed)
    rows = run_pipeline(exp.system, chains, exp.test_snr_grid_db, exp.T_on, seed)
    return [(snr, f"{name}:{ch}", val) for snr, name, ch, val in rows]


def _sweep_figure(exp, param, values, channels, seed, estimators, snr_conditions=(0.0, 10.0),
                  fixed=None):
    out = []
    for x in values:
        system = exp.system.replace(**{param: x, **(fixed or {})})
        sub = ExperimentConfig(**{**exp.__dict__, "system": system})
        for snr in snr_conditions:
            chains = _chains_for(sub, estimators, seed, snr_grid=[snr])
            for _, name, ch, val in run_pipeline(system, chains, [snr], exp.T_on, seed):
                if ch in channels:
                    out.append((float(x), f"{name}:{ch}@{snr:g}dB", val))
    return out


def figure6(exp, seed=0, estimators=ESTIMATORS, full=False):
    return _sweep_figure(exp, "L", FIG6_L["full" if full else "desk"], ("Gu", "Gt"), seed,
                         estimators, fixed={"M": 4})


def figure7(exp, seed=0, estimators=ESTIMATORS, full=False):
    L = 15 if full else exp.system.L
    return _sweep_figure(exp, "M", FIG7_M["full" if full else "desk"], CHANNELS, seed,
                         estimators, fixed={"L": L})


def figure8(C_s1=1, Ls=FIG8_L, Ms=FIG8_M):
    """Complexity versus L at M=4 and versus M at L=15 (exact, no training)."""
    out = []
    for panel, grid in (("vsL", [(4, L) for L in Ls]), ("vsM", [(M, 15) for M in Ms])):
        for M, L in grid:
            x = L if panel == "vsL" else M
            spans = (C_s1, L, L)
            for stage in (1, 2, 3):
                rep = costmodel.ls_cost(stage, M, L, spans)
                out.append((float(x), f"{panel}:LS-S{stage}:adds", float(rep.adds)))
                out.append((float(x), f"{panel}:LS-S{stage}:mults", float(rep.mults)))
                for k in (1, 2):
                    rep = costmodel.estimator_cost(stage, k, M, L, spans)
                    out.append((float(x), f"{panel}:DL-S{stage}I{k}:adds", float(rep.adds)))
                    out.append((float(x), f"{panel}:DL-S{stage}I{k}:mults", float(rep.mults)))
    return out


def reproduce_figure(fig_id: int, exp: ExperimentConfig, seed=0, full=False) -> str:
    if fig_id == 5:
        rows = figure5(exp, seed)
    elif fig_id == 6:
        rows = figure6(exp, seed, full=full)
    elif fig_id == 7:
        rows = figure7(exp, seed, full=full)
    elif fig_id == 8:
        rows = figure8(exp.system.C_s1)
    else:
        raise ValueError(f"unknown figure {fig_id}; expected 5, 6, 7 or 8")
    return rows_csv(["x", "curve", "value"], rows)
