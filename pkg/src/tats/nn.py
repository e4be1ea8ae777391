"""Differentiable building blocks with hand-written backward passes.

Everything runs in float64 so gradient checks against central finite
differences can be held to tight tolerances. Layers cache what their
backward pass needs; gradients accumulate into per-parameter buffers
until an optimizer step consumes them.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, TooShort

EPS_NORM = 1e-5


class Parameter:
    """A trainable array plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, value, name=""):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def size(self):
        return self.value.size


class Dense:
    """Affine map y = x W^T + b with uniform(-1/sqrt(in), 1/sqrt(in)) init."""

    def __init__(self, n_in, n_out, rng, name="dense"):
        bound = 1.0 / np.sqrt(n_in)
        self.weight = Parameter(
            rng.uniform(-bound, bound, size=(n_out, n_in)), f"{name}.weight"
        )
        self.bias = Parameter(rng.uniform(-bound, bound, size=n_out), f"{name}.bias")
        self._x = None

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.weight.value.shape[1]:
            raise ShapeMismatch(
                f"dense expects (batch, {self.weight.value.shape[1]}), got {x.shape}"
            )
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, upstream):
        upstream = np.asarray(upstream, dtype=np.float64)
        if self._x is None or upstream.shape != (
            self._x.shape[0],
            self.weight.value.shape[0],
        ):
            raise ShapeMismatch("backward called with mismatched upstream gradient")
        self.weight.grad += upstream.T @ self._x
        self.bias.grad += upstream.sum(axis=0)
        return upstream @ self.weight.value

    def parameters(self):
        return [self.weight, self.bias]


class Relu:
    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, upstream):
        return upstream * self._mask

    def parameters(self):
        return []


class Dropout:
    """Inverted dropout; draws a seeded mask only in training mode."""

    def __init__(self, rate, rng):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0,1), got {rate}")
        self.rate = rate
        self.rng = rng
        self._mask = None

    def forward(self, x, training):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, upstream):
        if self._mask is None:
            return upstream
        return upstream * self._mask

    def parameters(self):
        return []


class Mlp:
    """Dense stack with ReLU between layers and dropout after each ReLU."""

    def __init__(self, widths, rng, dropout=0.0, dropout_rng=None, name="mlp"):
        if len(widths) < 2:
            raise ValueError("an MLP needs at least input and output widths")
        self.layers = []
        for i in range(len(widths) - 1):
            self.layers.append(Dense(widths[i], widths[i + 1], rng, f"{name}.{i}"))
        self.activations = [Relu() for _ in range(len(self.layers) - 1)]
        self.dropouts = [
            Dropout(dropout, dropout_rng or np.random.default_rng(0))
            for _ in range(len(self.layers) - 1)
        ]

    def forward(self, x, training=False):
        out = x
        for i, layer in enumerate(self.layers):
            out = layer.forward(out)
            if i < len(self.activations):
                out = self.activations[i].forward(out)
                out = self.dropouts[i].forward(out, training)
        return out

    def backward(self, upstream):
        grad = upstream
        for i in reversed(range(len(self.layers))):
            if i < len(self.activations):
                grad = self.dropouts[i].backward(grad)
                grad = self.activations[i].backward(grad)
            grad = self.layers[i].backward(grad)
        return grad

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]


def mse_loss(pred, target):
    """Mean squared error over all cells and its gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad


def masked_mse_loss(pred, target, cell_mask):
    """MSE restricted to cells where ``cell_mask`` is 1."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    cell_mask = np.asarray(cell_mask, dtype=np.float64)
    if pred.shape != target.shape or pred.shape != cell_mask.shape:
        raise ShapeMismatch("pred, target and mask must share a shape")
    count = cell_mask.sum()
    if count == 0:
        return 0.0, np.zeros_like(pred)
    diff = (pred - target) * cell_mask
    loss = float(np.sum(diff * diff) / count)
    grad = 2.0 * diff / count
    return loss, grad


class Adam:
    """Bias-corrected Adam over parameter groups with per-group rates."""

    def __init__(self, groups, beta1=0.9, beta2=0.999, eps=1e-8):
        # groups: iterable of (params, learning_rate)
        self.groups = [(list(params), float(lr)) for params, lr in groups]
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {}
        self._v = {}
        for params, _ in self.groups:
            for p in params:
                self._m[id(p)] = np.zeros_like(p.value)
                self._v[id(p)] = np.zeros_like(p.value)

    def zero_grad(self):
        for params, _ in self.groups:
            for p in params:
                p.grad[...] = 0.0

    def step(self):
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for params, lr in self.groups:
            for p in params:
                m = self._m[id(p)]
                v = self._v[id(p)]
                m *= self.beta1
                m += (1.0 - self.beta1) * p.grad
                v *= self.beta2
                v += (1.0 - self.beta2) * p.grad * p.grad
                p.value -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class InstanceNormState:
    """Per-window statistics captured at normalization time."""

    mean: np.ndarray
    std: np.ndarray


def instance_normalize(x, eps=EPS_NORM):
    """Standardize each variable over the window dimension.

    Works on (L, N) windows or (B, L, N) batches; the window axis is the
    second-to-last. Standard deviation is population-style and clamped
    from below by ``eps`` so constant columns map to zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-2] < 2:
        raise TooShort("instance normalization needs a window of length >= 2")
    mean = x.mean(axis=-2, keepdims=True)
    std = np.maximum(x.std(axis=-2, keepdims=True), eps)
    return (x - mean) / std, InstanceNormState(mean=mean, std=std)


def masked_instance_normalize(x, mask, eps=EPS_NORM):
    """Like instance_normalize but statistics use observed cells only.

    Missing cells (mask 0) are zero-filled before the affine transform is
    applied to every cell. Raises if any variable has no observed entry.
    """
    from .errors import AllMasked

    x = np.asarray(x, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if x.shape != mask.shape:
        raise ShapeMismatch("values and mask must share a shape")
    counts = mask.sum(axis=-2, keepdims=True)
    if np.any(counts == 0):
        raise AllMasked("a variable has no observed entries in the window")
    filled = x * mask
    mean = filled.sum(axis=-2, keepdims=True) / counts
    var = ((x - mean) ** 2 * mask).sum(axis=-2, keepdims=True) / counts
    std = np.maximum(np.sqrt(var), eps)
    return (filled - mean) / std, InstanceNormState(mean=mean, std=std)


def instance_denormalize(y, state):
    """Invert a prior normalization using its captured statistics."""
    y = np.asarray(y, dtype=np.float64)
    return y * state.std + state.mean


def save_checkpoint(path, named_arrays, meta=None):
    """JSON header (names, shapes, metadata) + float64 LE payload."""
    entries = [
        {"name": name, "shape": list(arr.shape)} for name, arr in named_arrays
    ]
    header = json.dumps(
        {"format": "tats-checkpoint/1", "params": entries, "meta": meta or {}},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for _, arr in named_arrays:
            fh.write(np.asarray(arr, dtype="<f8").tobytes(order="C"))


def load_checkpoint(path):
    """Returns ([(name, array), ...], meta) from a checkpoint file."""
    with open(path, "rb") as fh:
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("format") != "tats-checkpoint/1":
            raise ShapeMismatch(f"{path}: unknown checkpoint format")
        out = []
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
            out.append((entry["name"], data.astype(np.float64)))
    return out, header.get("meta", {})
