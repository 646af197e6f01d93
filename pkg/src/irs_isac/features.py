"""CNN input/output pairs, training-set generation and pre/post-processing.

Every complex block is laid out as ``[real parts..., imaginary parts...]``
and matrices are vectorised column-major.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from irs_isac.airsim import (noise_variance, receive_stage1, receive_stage2,
                             receive_stage3)
from irs_isac.channels import ChannelRealization, crandn, realize
from irs_isac.lsbase import ls_stage1, ls_stage2, ls_stage3
from irs_isac.protocol import build_plan

STD_FLOOR = 1e-12
DATASET_MAGIC = b"ISACDS1"


def vec(a) -> np.ndarray:
    """Column-major vectorisation."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(x, rows, cols) -> np.ndarray:
    return np.asarray(x).reshape(rows, cols, order="F")


def split_ri(z) -> np.ndarray:
    z = np.asarray(z).ravel()
    return np.concatenate([z.real, z.imag])


def merge_ri(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size % 2:
        raise ValueError("real/imag vector must have even length")
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def input_length(stage: int, pair_type: int, M: int, L: int, spans) -> int:
    c1, c2, c3 = spans
    table = {
        (1, 1): 4 * M * c1,
        (1, 2): 4 * M,
        (2, 1): 2 * M * (c2 + 1),
        (2, 2): 2 * M * L,
        (3, 1): 2 * M * (c3 + L + 2),
        (3, 2): 2 * M * L,
    }
    try:
        return table[stage, pair_type]
    except KeyError:
        raise ValueError(f"no input layout for stage {stage}, type {pair_type}") from None


def target_length(stage: int, M: int, L: int) -> int:
    return 4 * M if stage == 1 else 2 * M * L


@dataclass
class IoPair:
    stage: int
    pair_type: int
    input: np.ndarray
    target: np.ndarray


def build_input(stage, pair_type, obs, plan=None, b_hat=None, f_hat=None, Gu_hat=None):
    """Real-valued network input for one stage observation.

    Type 1 uses the raw received blocks (plus prior estimates in stages 2
    and 3); type 2 uses the least-squares estimate of the stage's channel,
    for which ``plan`` is required.
    """
    if pair_type == 1:
        parts = [np.concatenate([y.ravel() for y in obs.y])]
        if stage >= 2:
            parts.append(f_hat.ravel())
        if stage == 3:
            parts += [b_hat.T.ravel(), vec(Gu_hat)]
        return split_ri(np.concatenate(parts))
    if pair_type != 2:
        raise ValueError(f"unknown pair type {pair_type}")
    if stage == 1:
        b_bar, f_bar = ls_stage1(obs, plan)
        return split_ri(np.concatenate([b_bar.T.ravel(), f_bar.ravel()]))
    if stage == 2:
        return split_ri(vec(ls_stage2(obs, plan, f_hat)))
    if stage == 3:
        return split_ri(vec(ls_stage3(obs, plan, b_hat, f_hat, Gu_hat)))
    raise ValueError(f"unknown stage {stage}")


def build_target(stage, chans) -> np.ndarray:
    if stage == 1:
        return split_ri(np.concatenate([chans.b.T.ravel(), chans.f.ravel()]))
    if stage == 2:
        return split_ri(vec(chans.Gu))
    if stage == 3:
        return split_ri(vec(chans.Gt))
    raise ValueError(f"unknown stage {stage}")


def postprocess(output, stage, M, L, delta=1.0):
    """Undo the output scaling and rebuild the complex channel estimate(s).

    Returns ``(b_hat, f_hat)`` for stage 1 and a single matrix otherwise.
    """
    output = np.asarray(output, dtype=float)
    if output.size != target_length(stage, M, L):
        raise ValueError(f"stage {stage} output needs {target_length(stage, M, L)} "
                         f"values, got {output.size}")
    z = merge_ri(output / delta)
    if stage == 1:
        return z[:M].reshape(M, 1), z[M:].reshape(1, M)
    if stage == 2:
        return unvec(z, L, M)
    return unvec(z, M, L)


def augment(chans, config, rng, U) -> list:
    """The original draw followed by ``U - 1`` noisy copies.

    Copies perturb the four estimated channels (``b``, ``f``, ``Gt``, ``Gu``)
    with CN(0, P_ch / SNR_ch) noise, ``P_ch`` being the mean squared entry
    magnitude of each matrix. Component links ``A``, ``g``, ``H``, ``h`` are
    carried over unchanged.
    """
    if U < 1:
        raise ValueError("U must be at least 1")
    lin = 10.0 ** (config.snr_ch_db / 10.0)
    out = [chans]
    for _ in range(U - 1):
        noisy = {}
        for name, m in chans.sac().items():
            p_ch = float(np.mean(np.abs(m) ** 2))
            noisy[name] = m + crandn(rng, m.shape, p_ch / lin)
        out.append(ChannelRealization(A=chans.A, g=chans.g, H=chans.H, h=chans.h, **noisy))
    return out


class LsPriors:
    """Feeds least-squares estimates from earlier stages forward."""

    def stage1(self, obs, plan):
        return ls_stage1(obs, plan)

    def stage2(self, obs, plan, f_hat):
        return ls_stage2(obs, plan, f_hat)


def simulate_stage_input(stage, pair_type, config, plan, chans, snr_db, rng, priors):
    """Run the observation pipeline up to ``stage`` and build that stage's input."""
    obs1 = receive_stage1(plan, chans, noise_variance(1, config, snr_db), config.C_s1, rng, snr_db)
    if stage == 1:
        return build_input(1, pair_type, obs1, plan)
    b_hat, f_hat = priors.stage1(obs1, plan)
    obs2 = receive_stage2(plan, chans, noise_variance(2, config, snr_db), rng, snr_db)
    if stage == 2:
        return build_input(2, pair_type, obs2, plan, f_hat=f_hat)
    Gu_hat = priors.stage2(obs2, plan, f_hat)
    obs3 = receive_stage3(plan, chans, noise_variance(3, config, snr_db), rng, snr_db)
    return build_input(3, pair_type, obs3, plan, b_hat=b_hat, f_hat=f_hat, Gu_hat=Gu_hat)


@dataclass
class SampleSet:
    stage: int
    pair_type: int
    inputs: np.ndarray
    targets: np.ndarray
    v_count: int
    u_count: int
    input_mean: np.ndarray | None = None
    input_std: np.ndarray | None = None
    delta: float = 1.0
    snr_db: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def pairs(self):
        return [IoPair(self.stage, self.pair_type, x, t)
                for x, t in zip(self.inputs, self.targets)]

    def subset(self, idx) -> "SampleSet":
        return SampleSet(self.stage, self.pair_type, self.inputs[idx], self.targets[idx],
                         self.v_count, self.u_count, self.input_mean, self.input_std,
                         self.delta, self.snr_db[idx] if self.snr_db.size else self.snr_db)


def _stream(rng) -> int:
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(rng.integers(2 ** 63))


def make_dataset(stage, pair_type, config, snr_db, V, U, rng, priors=None) -> SampleSet:
    """``V`` channel draws x ``U`` augmented variants, one pair per variant.

    ``snr_db`` may be a scalar or a grid; with a grid, original ``v`` is
    simulated at ``snr_db[v % len(grid)]`` so a pooled set covers every
    condition evenly. Each original gets its own RNG stream derived from the
    base seed and ``v``, so the result does not depend on generation order.
    The target of every variant is the original (clean) channel.
    """
    grid = np.atleast_1d(np.asarray(snr_db, dtype=float))
    priors = priors or LsPriors()
    plan = build_plan(config)
    base = _stream(rng)
    n_in = input_length(stage, pair_type, config.M, config.L, config.spans)
    n_out = target_length(stage, config.M, config.L)
    inputs = np.empty((V * U, n_in))
    targets = np.empty((V * U, n_out))
    snrs = np.empty(V * U)
    for v in range(V):
        vrng = np.random.default_rng([base, v])
        chans = realize(config, vrng)
        target = build_target(stage, chans)
        snr = float(grid[v % grid.size])
        for u, variant in enumerate(augment(chans, config, vrng, U)):
            i = v * U + u
            inputs[i] = simulate_stage_input(stage, pair_type, config, plan, variant,
                                             snr, vrng, priors)
            targets[i] = target
            snrs[i] = snr
    return SampleSet(stage, pair_type, inputs, targets, V, U, delta=config.delta, snr_db=snrs)


def standardize_fit(inputs):
    inputs = np.asarray(inputs, dtype=float)
    mean = inputs.mean(axis=0)
    std = np.maximum(inputs.std(axis=0), STD_FLOOR)
    return mean, std


def standardize_apply(x, mean, std):
    return (np.asarray(x, dtype=float) - mean) / std


def fit_preprocessing(train: SampleSet, delta: float) -> SampleSet:
    """Attach standardisation statistics (from this set only) and ``delta``."""
    train.input_mean, train.input_std = standardize_fit(train.inputs)
    train.delta = delta
    return train


def preprocess(ds: SampleSet, mean, std, delta):
    """Standardised inputs and ``delta``-scaled targets as float arrays."""
    return standardize_apply(ds.inputs, mean, std), ds.targets * delta


def write_dataset(path, ds: SampleSet):
    n_in, n_out = ds.inputs.shape[1], ds.targets.shape[1]
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<6i", ds.stage, ds.pair_type, ds.v_count, ds.u_count,
                             n_in, n_out))
        fh.write(np.ascontiguousarray(ds.inputs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ds.targets, dtype="<f8").tobytes())
        has_stats = ds.input_mean is not None
        fh.write(struct.pack("<i", int(has_stats)))
        if has_stats:
            fh.write(np.asarray(ds.input_mean, dtype="<f8").tobytes())
            fh.write(np.asarray(ds.input_std, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", ds.delta))


def read_dataset(path) -> SampleSet:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:7] != DATASET_MAGIC:
        raise ValueError(f"{path}: not a dataset file")
    off = 7
    stage, pair_type, V, U, n_in, n_out = struct.unpack_from("<6i", data, off)
    off += 24
    n = V * U

    def take(count):
        nonlocal off
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(float)
        off += 8 * count
        return arr

    try:
        inputs = take(n * n_in).reshape(n, n_in)
        targets = take(n * n_out).reshape(n, n_out)
        (has_stats,) = struct.unpack_from("<i", data, off)
        off += 4
        mean = std = None
        if has_stats:
            mean, std = take(n_in), take(n_in)
        (delta,) = struct.unpack_from("<d", data, off)
    except (ValueError, struct.error) as exc:
        raise ValueError(f"{path}: truncated dataset file") from exc
    return SampleSet(stage, pair_type, inputs, targets, V, U, mean, std, delta)
