"""A small fully-connected regressor trained to approximate ``E[y | t, z]``.

The network sees ``(z / sqrt(1 + t), ln t)`` and predicts ``y`` directly.
Dividing by ``sqrt(1 + t)`` keeps inputs at unit scale for a unit-scale
population at every noise level; ``ln t`` is the natural time coordinate
when ``t`` spans several decades.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .denoiser import check_positive_time
from .errors import DimensionMismatch, InvalidRange, NonFiniteLoss
from .population import GaussianMixture, sample

FORMAT_NAME = "difflab.mlp"
FORMAT_VERSION = 1
DATA_CHUNK = 1024  # training steps whose data are drawn in one go

ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    # name: (f(x), f'(x) expressed through x and f(x))
    "tanh": (np.tanh, lambda x, fx: 1.0 - fx * fx),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x, fx: (x > 0).astype(x.dtype)),
    "silu": (
        lambda x: x / (1.0 + np.exp(-x)),
        lambda x, fx: (s := 1.0 / (1.0 + np.exp(-x))) * (1.0 + x * (1.0 - s)),
    ),
}


@dataclass
class MLP:
    """Dense layers ``x @ W + b`` with a shared hidden activation, linear output."""

    sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator, activation: str = "tanh"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            # Glorot-uniform
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases, activation)

    def forward(self, x: np.ndarray, keep: bool = False):
        f = ACTIVATIONS[self.activation][0]
        pre, post = [], [x]
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            a = h @ W + b
            if i == last:
                h = a
                break
            h = f(a)
            if keep:
                pre.append(a)
                post.append(h)
        return (h, pre, post) if keep else h

    def loss_and_grads(self, x: np.ndarray, target: np.ndarray):
        """Mean over the batch of ``||net(x) - target||^2`` and its gradients."""
        df = ACTIVATIONS[self.activation][1]
        out, pre, post = self.forward(x, keep=True)
        n = len(x)
        diff = out - target
        loss = float(np.sum(diff * diff) / n)
        g = (2.0 / n) * diff
        gW = [None] * len(self.weights)
        gb = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            gW[i] = post[i].T @ g
            gb[i] = g.sum(axis=0)
            if i:
                g = (g @ self.weights[i].T) * df(pre[i - 1], post[i])
        return loss, gW, gb

    def n_parameters(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(W)) and np.all(np.isfinite(b))
            for W, b in zip(self.weights, self.biases)
        )


def network_inputs(t, z: np.ndarray) -> np.ndarray:
    """``[z / sqrt(1 + t), ln t]`` with ``t`` broadcast over ``z.shape[:-1]``."""
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), z.shape[:-1])
    return np.concatenate([z / np.sqrt(1.0 + t)[..., None], np.log(t)[..., None]], axis=-1)


@dataclass
class TrainedDenoiser:
    """Denoiser backed by an :class:`MLP`; satisfies the ``Denoiser`` protocol."""

    net: MLP
    t_range: tuple[float, float]
    meta: dict = field(default_factory=dict)
    loss_history: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.net.sizes[-1]

    def posterior_mean(self, t, z) -> np.ndarray:
        t = check_positive_time(t)
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected last axis {self.dim}, got {z.shape}")
        return self.net.forward(network_inputs(t, z))

    def batch_loss(self, y: np.ndarray, t: np.ndarray, z: np.ndarray) -> float:
        out = self.posterior_mean(t, z)
        return float(np.mean(np.sum((out - y) ** 2, axis=-1)))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "layer_sizes": self.net.sizes,
            "activation": self.net.activation,
            "input": "z/sqrt(1+t), ln t",
            "t_range": list(self.t_range),
            "layers": [
                {"weight_shape": list(W.shape), "weight": W.ravel().tolist(), "bias": b.tolist()}
                for W, b in zip(self.net.weights, self.net.biases)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedDenoiser":
        if doc.get("format") != FORMAT_NAME:
            raise ValueError(f"not a {FORMAT_NAME} document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported version {doc.get('version')!r}")
        sizes = [int(s) for s in doc["layer_sizes"]]
        weights, biases = [], []
        for i, layer in enumerate(doc["layers"]):
            shape = (sizes[i], sizes[i + 1])
            if tuple(layer["weight_shape"]) != shape:
                raise ValueError(f"layer {i}: shape {layer['weight_shape']} != {list(shape)}")
            weights.append(np.asarray(layer["weight"], dtype=np.float64).reshape(shape))
            biases.append(np.asarray(layer["bias"], dtype=np.float64).reshape(shape[1]))
        if len(weights) != len(sizes) - 1:
            raise ValueError("layer count does not match layer_sizes")
        net = MLP(sizes, weights, biases, doc.get("activation", "tanh"))
        t_range = tuple(float(v) for v in doc["t_range"])
        return cls(net, t_range, dict(doc.get("meta", {})))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainedDenoiser":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _draw_training_data(source, n: int, t0: float, T: float, rng: np.random.Generator):
    if isinstance(source, GaussianMixture):
        y = sample(source, n, rng)
    else:
        y = source[rng.integers(0, len(source), size=n)]
    t = np.exp(rng.uniform(np.log(t0), np.log(T), size=n))
    z = y + np.sqrt(t)[:, None] * rng.standard_normal(y.shape)
    return y, t, z


def learning_rates(lr: float, lr_end: float | None, steps: int) -> np.ndarray:
    """Per-step rates: constant ``lr``, or a cosine anneal from ``lr`` to ``lr_end``."""
    if lr_end is None or steps < 2:
        return np.full(steps, float(lr))
    frac = np.arange(steps) / (steps - 1)
    return lr_end + 0.5 * (lr - lr_end) * (1.0 + np.cos(np.pi * frac))


def _train_loop(net, data_source, steps, batch, t0, T, rng, rates, momentum, history) -> None:
    vel_W = [np.zeros_like(W) for W in net.weights]
    vel_b = [np.zeros_like(b) for b in net.biases]
    for start in range(0, steps, DATA_CHUNK):
        count = min(DATA_CHUNK, steps - start)
        y, t, z = _draw_training_data(data_source, count * batch, t0, T, rng)
        x = network_inputs(t, z)
        for j in range(count):
            sl = slice(j * batch, (j + 1) * batch)
            loss, gW, gb = net.loss_and_grads(x[sl], y[sl])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at step {start + j}")
            history[start + j] = loss
            lr = rates[start + j]
            for i in range(len(net.weights)):
                vel_W[i] = momentum * vel_W[i] - lr * gW[i]
                vel_b[i] = momentum * vel_b[i] - lr * gb[i]
                net.weights[i] += vel_W[i]
                net.biases[i] += vel_b[i]


def train_denoiser(
    data_source: Union[GaussianMixture, np.ndarray],
    arch: Sequence[int],
    t_range: tuple[float, float],
    steps: int,
    batch: int,
    rng: np.random.Generator,
    *,
    lr: float = 0.01,
    momentum: float = 0.9,
    activation: str = "tanh",
    lr_end: float | None = 1e-4,
) -> TrainedDenoiser:
    """Fit ``E[y | t, z]`` by minimizing ``E (net(z / sqrt(1+t), ln t) - y)^2``.

    Each example draws ``t`` log-uniformly on ``t_range``, ``y`` from the data
    source (a mixture, or rows of a sample array sampled with replacement),
    and ``z = y + sqrt(t) delta``. Parameters follow SGD with heavy-ball
    momentum; the step size follows a cosine anneal from ``lr`` down to
    ``lr_end`` (``lr_end=None`` keeps it fixed at ``lr``).

    Raises:
        InvalidRange: unless ``0 < t_range[0] < t_range[1]``.
        DimensionMismatch: if ``arch`` is not ``[dim + 1, ..., dim]``.
        NonFiniteLoss: as soon as a batch loss is NaN or infinite.
    """
    t0, T = (float(v) for v in t_range)
    if not (0 < t0 < T):
        raise InvalidRange(f"need 0 < t0 < T, got {t_range!r}")
    if isinstance(data_source, GaussianMixture):
        dim = data_source.dim
    else:
        data_source = np.asarray(data_source, dtype=np.float64)
        if data_source.ndim != 2 or len(data_source) == 0:
            raise DimensionMismatch("sample data must have shape (n, dim)")
        dim = data_source.shape[1]
    arch = [int(a) for a in arch]
    if arch[0] != dim + 1 or arch[-1] != dim:
        raise DimensionMismatch(f"arch must start at {dim + 1} and end at {dim}, got {arch}")

    net = MLP.init(arch, rng, activation)
    history = np.empty(steps)

    # divergence is reported through NonFiniteLoss, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        rates = learning_rates(lr, lr_end, steps)
        _train_loop(net, data_source, steps, batch, t0, T, rng, rates, momentum, history)

    if not net.is_finite():
        raise NonFiniteLoss("parameters became non-finite")
    if steps == 0:
        y, t, z = _draw_training_data(data_source, batch, t0, T, rng)
        final = float(np.mean(np.sum((net.forward(network_inputs(t, z)) - y) ** 2, axis=-1)))
    else:
        final = float(history[-min(steps, 1000) :].mean())
    meta = {
        "steps": int(steps),
        "batch": int(batch),
        "lr": lr,
        "lr_end": lr_end,
        "momentum": momentum,
        "final_train_loss": final,
    }
    return TrainedDenoiser(net, (t0, T), meta, history)
