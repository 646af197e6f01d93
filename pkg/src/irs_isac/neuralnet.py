"""A small numpy network engine for the DE-CNN and RE-CNN estimators.

Every layer maps a batch of flat vectors ``(B, n_in) -> (B, n_out)``. A
convolution treats its input as a single-channel sequence and emits its
filter maps concatenated filter by filter, so a following convolution runs
over that flattened sequence.
"""

import copy
import math
import struct
from dataclasses import dataclass

import numpy as np

WEIGHTS_MAGIC = b"ISACNN1"
WEIGHTS_VERSION = 1

_KINDS = {"conv1d": 0, "dense": 1}
_ACTS = {"linear": 0, "tanh": 1}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: int
    kernel: int = 0
    stride: int = 1
    activation: str = "linear"

    def out_len(self, n_in: int) -> int:
        if self.kind == "conv1d":
            return self.units * conv_len(n_in, self.kernel, self.stride)
        return self.units


def conv_len(n_in, kernel, stride=1) -> int:
    if kernel > n_in:
        raise ValueError(f"kernel {kernel} longer than input {n_in}")
    return (n_in - kernel) // stride + 1


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    batch_size: int = 200
    max_epochs: int = 200
    patience: int = 5
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.max_epochs, self.patience,
               self.validation_fraction) <= 0:
            raise ValueError("training settings must be positive")


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Network:
    specs: list
    input_len: int
    params: list
    adam_m: list = None
    adam_v: list = None
    step: int = 0
    seed: int = 0
    input_mean: np.ndarray | None = None
    input_std: np.ndarray | None = None
    delta: float = 1.0

    def __post_init__(self):
        if self.adam_m is None:
            self.adam_m = [tuple(np.zeros_like(p) for p in layer) for layer in self.params]
            self.adam_v = [tuple(np.zeros_like(p) for p in layer) for layer in self.params]

    @property
    def output_len(self) -> int:
        n = self.input_len
        for s in self.specs:
            n = s.out_len(n)
        return n

    @property
    def n_params(self) -> int:
        return sum(p.size for layer in self.params for p in layer)

    def layer_inputs(self):
        n, out = self.input_len, []
        for s in self.specs:
            out.append(n)
            n = s.out_len(n)
        return out


def _init_layer(spec, n_in, rng):
    if spec.kind == "conv1d":
        fan_in, fan_out = spec.kernel, spec.kernel * spec.units
        shape = (spec.units, spec.kernel)
    else:
        fan_in, fan_out = n_in, spec.units
        shape = (n_in, spec.units)
    lim = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape), np.zeros(spec.units)


def build_network(specs, input_len, seed=0) -> Network:
    rng = np.random.default_rng(seed)
    params, n = [], input_len
    for s in specs:
        if s.kind not in _KINDS or s.activation not in _ACTS or s.units < 1:
            raise ValueError(f"bad layer spec {s}")
        params.append(_init_layer(s, n, rng))
        n = s.out_len(n)
    return Network(list(specs), input_len, params, seed=seed)


def build_de_cnn(input_len, output_len, filters=128, hidden=200, seed=0) -> Network:
    """One tanh convolution, one linear hidden layer, linear output."""
    if input_len < 4:
        raise ValueError("input shorter than the 4-tap kernel")
    specs = [
        LayerSpec("conv1d", filters, 4, 1, "tanh"),
        LayerSpec("dense", hidden),
        LayerSpec("dense", output_len),
    ]
    return build_network(specs, input_len, seed)


def build_re_cnn(input_len, output_len, filters=(128, 64), hidden=(600, 900), seed=0) -> Network:
    """Two tanh convolutions, two linear hidden layers, linear output."""
    if input_len < 4:
        raise ValueError("input shorter than the 4-tap kernel")
    specs = [
        LayerSpec("conv1d", filters[0], 4, 1, "tanh"),
        LayerSpec("conv1d", filters[1], 4, 1, "tanh"),
        LayerSpec("dense", hidden[0]),
        LayerSpec("dense", hidden[1]),
        LayerSpec("dense", output_len),
    ]
    return build_network(specs, input_len, seed)


def _windows(x, kernel, stride):
    w = np.lib.stride_tricks.sliding_window_view(x, kernel, axis=1)
    return w[:, ::stride]


def _layer_forward(spec, W, b, x):
    if spec.kind == "conv1d":
        win = _windows(x, spec.kernel, spec.stride)           # (B, eta, k)
        z = (win @ W.T + b).transpose(0, 2, 1)                # (B, F, eta)
        z = z.reshape(x.shape[0], -1)
    else:
        z = x @ W + b
    if spec.activation == "tanh":
        return np.tanh(z)
    return z


def forward(net: Network, x, return_cache=False):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.input_len:
        raise ValueError(f"network expects {net.input_len} inputs, got {x.shape[1]}")
    cache = [x]
    for spec, (W, b) in zip(net.specs, net.params):
        x = _layer_forward(spec, W, b, x)
        cache.append(x)
    if return_cache:
        return x, cache
    return x[0] if single else x


def _layer_backward(spec, W, a_in, a_out, grad_out):
    if spec.activation == "tanh":
        grad_out = grad_out * (1.0 - a_out ** 2)
    if spec.kind == "dense":
        return grad_out @ W.T, (a_in.T @ grad_out, grad_out.sum(axis=0))
    B = a_in.shape[0]
    F, k = W.shape
    s = spec.stride
    g = grad_out.reshape(B, F, -1).transpose(0, 2, 1)         # (B, eta, F)
    eta = g.shape[1]
    win = _windows(a_in, k, s)
    dW = np.einsum("btf,btk->fk", g, win)
    db = g.sum(axis=(0, 1))
    dwin = g @ W                                              # (B, eta, k)
    dx = np.zeros_like(a_in)
    for j in range(k):
        dx[:, j:j + s * (eta - 1) + 1:s] += dwin[:, :, j]
    return dx, (dW, db)


def loss_and_grad(net: Network, X, Y):
    """Mean squared error over batch and outputs, with backpropagated gradients."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    out, cache = forward(net, X, return_cache=True)
    err = out - Y
    loss = float(np.mean(err ** 2))
    grad = 2.0 * err / err.size
    grads = [None] * len(net.specs)
    for i in range(len(net.specs) - 1, -1, -1):
        W = net.params[i][0]
        grad, grads[i] = _layer_backward(net.specs[i], W, cache[i], cache[i + 1], grad)
    return loss, grads


def adam_step(net: Network, grads, lr):
    net.step += 1
    t = net.step
    c1 = 1.0 - ADAM_BETA1 ** t
    c2 = 1.0 - ADAM_BETA2 ** t
    for i, layer in enumerate(net.params):
        new_p, new_m, new_v = [], [], []
        for p, g, m, v in zip(layer, grads[i], net.adam_m[i], net.adam_v[i]):
            m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
            p = p - lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
            new_p.append(p)
            new_m.append(m)
            new_v.append(v)
        net.params[i] = tuple(new_p)
        net.adam_m[i] = tuple(new_m)
        net.adam_v[i] = tuple(new_v)
    return net


def mse(net: Network, X, Y, chunk=2000) -> float:
    total = 0.0
    for i in range(0, len(X), chunk):
        total += float(np.sum((forward(net, X[i:i + chunk]) - Y[i:i + chunk]) ** 2))
    return total / Y.size


def train(net: Network, train_set, val_set, cfg: TrainConfig, log=None):
    """Minibatch Adam with early stopping on validation MSE.

    ``train_set`` and ``val_set`` are ``(inputs, targets)`` pairs that are
    already preprocessed. Training stops once validation MSE has failed to
    improve strictly for ``cfg.patience`` consecutive epochs, or after
    ``cfg.max_epochs``; the best-validation weights are restored.
    """
    X, Y = (np.asarray(a, dtype=float) for a in train_set)
    Xv, Yv = (np.asarray(a, dtype=float) for a in val_set)
    if len(X) == 0 or len(Xv) == 0:
        raise ValueError("training and validation sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    history = {"train_mse": [], "val_mse": [], "initial_val_mse": mse(net, Xv, Yv)}
    best, best_params, wait = math.inf, copy.deepcopy(net.params), 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads = loss_and_grad(net, X[idx], Y[idx])
            adam_step(net, grads, cfg.learning_rate)
        tr, va = mse(net, X, Y), mse(net, Xv, Yv)
        history["train_mse"].append(tr)
        history["val_mse"].append(va)
        if log:
            log(f"epoch {epoch + 1}: train {tr:.4e} val {va:.4e}")
        if va < best:
            best, best_params, wait = va, copy.deepcopy(net.params), 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    net.params = best_params
    history["best_val_mse"] = best
    history["epochs"] = len(history["val_mse"])
    return net, history


def save(net: Network, path):
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<3I", WEIGHTS_VERSION, net.input_len, len(net.specs)))
        for s in net.specs:
            fh.write(struct.pack("<5I", _KINDS[s.kind], s.units, s.kernel, s.stride,
                                 _ACTS[s.activation]))
        for layer in net.params:
            for p in layer:
                fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
        has_pre = net.input_mean is not None
        fh.write(struct.pack("<I", int(has_pre)))
        if has_pre:
            fh.write(np.asarray(net.input_mean, dtype="<f8").tobytes())
            fh.write(np.asarray(net.input_std, dtype="<f8").tobytes())
        fh.write(struct.pack("<dq", net.delta, net.seed))


def load(path) -> Network:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:7] != WEIGHTS_MAGIC:
        raise ValueError(f"{path}: bad magic, not a weight file")
    try:
        version, input_len, n_layers = struct.unpack_from("<3I", data, 7)
        if version != WEIGHTS_VERSION:
            raise ValueError(f"{path}: unsupported weight file version {version}")
        off = 19
        kinds = {v: k for k, v in _KINDS.items()}
        acts = {v: k for k, v in _ACTS.items()}
        specs = []
        for _ in range(n_layers):
            kind, units, kernel, stride, act = struct.unpack_from("<5I", data, off)
            off += 20
            specs.append(LayerSpec(kinds[kind], units, kernel, stride, acts[act]))

        def take(shape):
            nonlocal off
            count = int(np.prod(shape))
            if off + 8 * count > len(data):
                raise ValueError(f"{path}: truncated weight file")
            arr = np.frombuffer(data, "<f8", count, off).astype(float).reshape(shape)
            off += 8 * count
            return arr

        params, n = [], input_len
        for s in specs:
            wshape = (s.units, s.kernel) if s.kind == "conv1d" else (n, s.units)
            params.append((take(wshape), take((s.units,))))
            n = s.out_len(n)
        (has_pre,) = struct.unpack_from("<I", data, off)
        off += 4
        mean = std = None
        if has_pre:
            mean, std = take((input_len,)), take((input_len,))
        delta, seed = struct.unpack_from("<dq", data, off)
    except (struct.error, KeyError) as exc:
        raise ValueError(f"{path}: corrupt weight file") from exc
    return Network(specs, input_len, params, seed=seed, input_mean=mean,
                   input_std=std, delta=delta)
