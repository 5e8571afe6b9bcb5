"""Differentiable layers with explicit forward caches and manual backward passes.

Every layer follows the same contract: ``forward(x, mode, rng)`` returns
``(y, cache)``, ``backward(cache, upstream)`` returns ``(grad_x, grads)``
with ``grads`` aligned to ``param_blocks()``. Gradients are for the batch
objective as-is; any L2 term is added by the trainer, never here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .ndcore import Rng

TRAIN = "train"
INFER = "infer"


@dataclass
class ParamBlock:
    """One trainable array plus whether L2 decay applies to it."""

    name: str
    array: np.ndarray
    l2: bool


def relu(x):
    return np.maximum(0.0, np.asarray(x, dtype=np.float64))


def relu_backward(x, upstream):
    """Pass upstream where x > 0, zero elsewhere (subgradient 0 at 0)."""
    return np.asarray(upstream, dtype=np.float64) * (np.asarray(x) > 0)


def he_init(fan_in: int, fan_out: int, rng: Rng) -> np.ndarray:
    """Gaussian(0, sqrt(2/fan_in)) weights, shaped [fan_out x fan_in]."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan_in and fan_out must be >= 1, got {fan_in}, {fan_out}")
    std = np.sqrt(2.0 / fan_in)
    return rng.normal(fan_out * fan_in, 0.0, std).reshape(fan_out, fan_in)


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood and its logit gradient.

    Rows are max-shifted before exponentiation, so arbitrarily large logits
    stay finite. Gradient is (softmax - onehot) / batch.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels)
    b, c = z.shape
    if y.shape != (b,):
        raise ShapeError(f"labels shape {y.shape} does not match batch size {b}")
    if y.min() < 0 or y.max() >= c:
        raise ValueError(f"labels must lie in [0, {c}), got range [{y.min()}, {y.max()}]")
    shifted = z - z.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -float(np.mean(log_probs[np.arange(b), y]))
    grad = np.exp(log_probs)
    grad[np.arange(b), y] -= 1.0
    return loss, grad / b


class Dense:
    """Affine map y = f(x W^T + b) with f in {relu, identity}."""

    kind = "dense"

    def __init__(self, weights: np.ndarray, bias: np.ndarray, activation: str = "relu"):
        if activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {activation!r}")
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64).ravel()
        if bias.shape[0] != weights.shape[0]:
            raise ShapeError(f"bias length {bias.shape[0]} != weight rows {weights.shape[0]}")
        self.weights = weights
        self.bias = bias
        self.activation = activation

    @classmethod
    def init(cls, fan_in: int, fan_out: int, rng: Rng, activation: str = "relu") -> "Dense":
        return cls(he_init(fan_in, fan_out, rng), np.zeros(fan_out), activation)

    @property
    def input_dim(self):
        return self.weights.shape[1]

    @property
    def output_dim(self):
        return self.weights.shape[0]

    def forward(self, x, mode=INFER, rng=None):
        if x.shape[1] != self.input_dim:
            raise ShapeError(f"dense expects {self.input_dim} columns, got {x.shape[1]}")
        z = x @ self.weights.T + self.bias
        y = relu(z) if self.activation == "relu" else z
        return y, (x, z)

    def backward(self, cache, upstream):
        x, z = cache
        dz = upstream * (z > 0) if self.activation == "relu" else upstream
        grad_w = dz.T @ x
        grad_b = dz.sum(axis=0)
        grad_x = dz @ self.weights
        return grad_x, [grad_w, grad_b]

    def param_blocks(self):
        return [ParamBlock("weights", self.weights, True), ParamBlock("bias", self.bias, False)]

    def to_entry(self):
        return {
            "type": self.kind,
            "activation": self.activation,
            "shape": [list(self.weights.shape), list(self.bias.shape)],
            "values": [self.weights.tolist(), self.bias.tolist()],
        }

    @classmethod
    def from_entry(cls, e):
        return cls(np.array(e["values"][0], dtype=np.float64),
                   np.array(e["values"][1], dtype=np.float64),
                   e["activation"])


class ReLULayer:
    """Standalone rectifier for graph positions where it is its own stage."""

    kind = "relu"

    def forward(self, x, mode=INFER, rng=None):
        return relu(x), x

    def backward(self, cache, upstream):
        return relu_backward(cache, upstream), []

    def param_blocks(self):
        return []

    def to_entry(self):
        return {"type": self.kind, "shape": [], "values": []}

    @classmethod
    def from_entry(cls, e):
        return cls()


class BatchNorm:
    """Per-column normalization with learned scale and shift.

    Training batches are normalized by their own mean and biased variance,
    and the running statistics move by ``momentum``. Inference (and any
    caller that cannot form batch statistics) normalizes by the running
    statistics instead. Running variance uses the same biased estimator.
    """

    kind = "batchnorm"

    def __init__(self, dim: int, momentum: float = 0.9, epsilon: float = 1e-5):
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.epsilon = epsilon

    @property
    def dim(self):
        return self.gamma.shape[0]

    def forward(self, x, mode=INFER, rng=None):
        if x.shape[1] != self.dim:
            raise ShapeError(f"batchnorm expects {self.dim} columns, got {x.shape[1]}")
        if mode == TRAIN:
            if x.shape[0] < 2:
                raise ValueError("batchnorm training statistics need a batch of >= 2 rows")
            mean = x.mean(axis=0)
            var = x.var(axis=0)  # biased: divide by batch size
            inv_std = 1.0 / np.sqrt(var + self.epsilon)
            xhat = (x - mean) * inv_std
            self.running_mean *= self.momentum
            self.running_mean += (1.0 - self.momentum) * mean
            self.running_var *= self.momentum
            self.running_var += (1.0 - self.momentum) * var
            cache = ("batch", x, xhat, inv_std)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.epsilon)
            xhat = (x - self.running_mean) * inv_std
            cache = ("running", x, xhat, inv_std)
        return self.gamma * xhat + self.beta, cache

    def backward(self, cache, upstream):
        path, x, xhat, inv_std = cache
        grad_gamma = (upstream * xhat).sum(axis=0)
        grad_beta = upstream.sum(axis=0)
        dxhat = upstream * self.gamma
        if path == "running":
            # running stats are constants, the map is affine per column
            grad_x = dxhat * inv_std
        else:
            # gradient through batch mean and variance
            b = x.shape[0]
            grad_x = (inv_std / b) * (
                b * dxhat
                - dxhat.sum(axis=0)
                - xhat * (dxhat * xhat).sum(axis=0)
            )
        return grad_x, [grad_gamma, grad_beta]

    def param_blocks(self):
        return [ParamBlock("gamma", self.gamma, False), ParamBlock("beta", self.beta, False)]

    def to_entry(self):
        return {
            "type": self.kind,
            "momentum": self.momentum,
            "epsilon": self.epsilon,
            "shape": [[self.dim]] * 4,
            "values": [
                self.gamma.tolist(),
                self.beta.tolist(),
                self.running_mean.tolist(),
                self.running_var.tolist(),
            ],
        }

    @classmethod
    def from_entry(cls, e):
        layer = cls(len(e["values"][0]), e["momentum"], e["epsilon"])
        layer.gamma = np.array(e["values"][0], dtype=np.float64)
        layer.beta = np.array(e["values"][1], dtype=np.float64)
        layer.running_mean = np.array(e["values"][2], dtype=np.float64)
        layer.running_var = np.array(e["values"][3], dtype=np.float64)
        return layer


class Dropout:
    """Inverted dropout: train-time masking scaled by 1/(1-rate), inference is identity."""

    kind = "dropout"

    def __init__(self, rate: float = 0.5):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.last_mask = None

    def forward(self, x, mode=INFER, rng=None):
        if mode != TRAIN or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("dropout in train mode needs an Rng")
        keep = rng.uniform(x.size).reshape(x.shape) >= self.rate
        self.last_mask = keep
        scale = 1.0 / (1.0 - self.rate)
        return x * keep * scale, (keep, scale)

    def backward(self, cache, upstream):
        if cache is None:
            return upstream, []
        keep, scale = cache
        return upstream * keep * scale, []

    def param_blocks(self):
        return []

    def to_entry(self):
        return {"type": self.kind, "rate": self.rate, "shape": [], "values": []}

    @classmethod
    def from_entry(cls, e):
        return cls(e["rate"])


class ResidualBlock:
    """Two square dense maps with a rectifier each, plus the identity skip:
    y = f(W2 f(W1 x + b1) + b2) + x. Dimension is preserved by construction."""

    kind = "residual"

    def __init__(self, w1, b1, w2, b2):
        w1 = np.asarray(w1, dtype=np.float64)
        w2 = np.asarray(w2, dtype=np.float64)
        d = w1.shape[0]
        if w1.shape != (d, d) or w2.shape != (d, d):
            raise ShapeError(
                f"residual weights must be square and equal-sized, got {w1.shape}, {w2.shape}"
            )
        self.w1 = w1
        self.b1 = np.asarray(b1, dtype=np.float64).ravel()
        self.w2 = w2
        self.b2 = np.asarray(b2, dtype=np.float64).ravel()

    @classmethod
    def init(cls, dim: int, rng: Rng) -> "ResidualBlock":
        return cls(he_init(dim, dim, rng), np.zeros(dim), he_init(dim, dim, rng), np.zeros(dim))

    @property
    def dim(self):
        return self.w1.shape[0]

    def forward(self, x, mode=INFER, rng=None):
        if x.shape[1] != self.dim:
            raise ShapeError(f"residual block expects {self.dim} columns, got {x.shape[1]}")
        z1 = x @ self.w1.T + self.b1
        a1 = relu(z1)
        z2 = a1 @ self.w2.T + self.b2
        y = relu(z2) + x
        return y, (x, z1, a1, z2)

    def backward(self, cache, upstream):
        x, z1, a1, z2 = cache
        dz2 = upstream * (z2 > 0)
        grad_w2 = dz2.T @ a1
        grad_b2 = dz2.sum(axis=0)
        da1 = dz2 @ self.w2
        dz1 = da1 * (z1 > 0)
        grad_w1 = dz1.T @ x
        grad_b1 = dz1.sum(axis=0)
        grad_x = dz1 @ self.w1 + upstream  # skip path passes upstream through untouched
        return grad_x, [grad_w1, grad_b1, grad_w2, grad_b2]

    def param_blocks(self):
        return [
            ParamBlock("w1", self.w1, True),
            ParamBlock("b1", self.b1, False),
            ParamBlock("w2", self.w2, True),
            ParamBlock("b2", self.b2, False),
        ]

    def to_entry(self):
        return {
            "type": self.kind,
            "shape": [list(self.w1.shape), [self.dim], list(self.w2.shape), [self.dim]],
            "values": [self.w1.tolist(), self.b1.tolist(), self.w2.tolist(), self.b2.tolist()],
        }

    @classmethod
    def from_entry(cls, e):
        v = e["values"]
        return cls(np.array(v[0]), np.array(v[1]), np.array(v[2]), np.array(v[3]))


class Conv1D:
    """Valid (no padding) cross-correlation over the feature axis.

    Each row is treated as a length-n signal; outputs of the K kernels are
    concatenated kernel-major, giving K * L_out columns with
    L_out = floor((n - width) / stride) + 1.
    """

    kind = "conv1d"

    def __init__(self, kernels, bias, stride: int = 1):
        kernels = np.asarray(kernels, dtype=np.float64)
        if kernels.ndim != 2 or kernels.shape[1] < 1:
            raise ShapeError(f"kernels must be [n_kernels x width], got {kernels.shape}")
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.kernels = kernels
        self.bias = np.asarray(bias, dtype=np.float64).ravel()
        self.stride = stride

    @classmethod
    def init(cls, n_kernels: int, width: int, rng: Rng, stride: int = 1) -> "Conv1D":
        return cls(he_init(width, n_kernels, rng), np.zeros(n_kernels), stride)

    @property
    def width(self):
        return self.kernels.shape[1]

    @property
    def n_kernels(self):
        return self.kernels.shape[0]

    def output_length(self, n: int) -> int:
        if n < self.width:
            raise ShapeError(f"input length {n} shorter than kernel width {self.width}")
        return (n - self.width) // self.stride + 1

    def _windows(self, x):
        l_out = self.output_length(x.shape[1])
        view = np.lib.stride_tricks.sliding_window_view(x, self.width, axis=1)
        return np.ascontiguousarray(view[:, :: self.stride, :][:, :l_out, :])

    def forward(self, x, mode=INFER, rng=None):
        win = self._windows(x)  # [b, L, width]
        y = np.einsum("blw,kw->bkl", win, self.kernels) + self.bias[None, :, None]
        b, k, l = y.shape
        return y.reshape(b, k * l), (x, win, (b, k, l))

    def backward(self, cache, upstream):
        x, win, (b, k, l) = cache
        dy = upstream.reshape(b, k, l)
        grad_bias = dy.sum(axis=(0, 2))
        grad_kern = np.einsum("bkl,blw->kw", dy, win)
        grad_x = np.zeros_like(x)
        dcol = np.einsum("bkl,kw->blw", dy, self.kernels)  # [b, L, width]
        for s in range(self.width):
            idx = s + self.stride * np.arange(l)
            np.add.at(grad_x, (slice(None), idx), dcol[:, :, s])
        return grad_x, [grad_kern, grad_bias]

    def param_blocks(self):
        return [ParamBlock("kernels", self.kernels, True), ParamBlock("bias", self.bias, False)]

    def to_entry(self):
        return {
            "type": self.kind,
            "stride": self.stride,
            "shape": [list(self.kernels.shape), list(self.bias.shape)],
            "values": [self.kernels.tolist(), self.bias.tolist()],
        }

    @classmethod
    def from_entry(cls, e):
        return cls(np.array(e["values"][0]), np.array(e["values"][1]), e["stride"])


LAYER_TYPES = {
    cls.kind: cls for cls in (Dense, ReLULayer, BatchNorm, Dropout, ResidualBlock, Conv1D)
}


def layer_from_entry(entry: dict):
    try:
        cls = LAYER_TYPES[entry["type"]]
    except KeyError:
        raise ValueError(f"unknown layer type {entry.get('type')!r}") from None
    return cls.from_entry(entry)


def dense_forward(x, layer: Dense) -> np.ndarray:
    """Convenience wrapper returning only the activation output."""
    y, _ = layer.forward(np.asarray(x, dtype=np.float64))
    return y


def batchnorm_forward(x, layer: BatchNorm, mode: str) -> np.ndarray:
    y, _ = layer.forward(np.asarray(x, dtype=np.float64), mode)
    return y


def batchnorm_backward(layer: BatchNorm, cache, upstream):
    grad_x, (grad_gamma, grad_beta) = layer.backward(cache, upstream)
    return grad_x, grad_gamma, grad_beta


def dropout_forward(x, layer: Dropout, mode: str, rng: Rng | None = None) -> np.ndarray:
    y, _ = layer.forward(np.asarray(x, dtype=np.float64), mode, rng)
    return y


def residual_forward(x, block: ResidualBlock) -> np.ndarray:
    y, _ = block.forward(np.asarray(x, dtype=np.float64))
    return y


def residual_backward(block: ResidualBlock, cache, upstream):
    return block.backward(cache, upstream)


def conv1d_forward(x, layer: Conv1D) -> np.ndarray:
    y, _ = layer.forward(np.asarray(x, dtype=np.float64))
    return y
