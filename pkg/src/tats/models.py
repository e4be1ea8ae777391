"""Pluggable base models the text-augmentation wrapper trains through.

All models map a (batch, L, C) window to a (batch, H, C) forecast or a
(batch, L, C) reconstruction for any channel count C fixed at
construction, and expose their parameters to the optimizer. By default
the linear heads mix channels (one affine map over the flattened
window), so auxiliary channels can inform every output; setting
``channel_mixing=False`` restores the classical per-channel shared head,
which is blind to channels other than its own.
"""

import numpy as np

from .errors import BadKernel, ShapeMismatch
from .nn import Dense, Mlp

MODEL_KINDS = ("linear", "dlinear", "mlp")


def _as_batch(u):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 2:
        return u[None, :, :], True
    if u.ndim == 3:
        return u, False
    raise ShapeMismatch(f"expected (L, C) or (batch, L, C), got shape {u.shape}")


def moving_average_matrix(length, kernel):
    """L x L centered moving average with edge replication padding."""
    if kernel < 1 or kernel % 2 == 0 or kernel > length:
        raise BadKernel(f"kernel must be odd, positive and <= {length}, got {kernel}")
    half = kernel // 2
    mat = np.zeros((length, length))
    for t in range(length):
        for j in range(-half, half + 1):
            mat[t, min(max(t + j, 0), length - 1)] += 1.0 / kernel
    return mat


def moving_average_decompose(x, kernel):
    """Split a window into (trend, remainder); their sum is x exactly."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatch(f"expected an (L, C) window, got shape {x.shape}")
    trend = moving_average_matrix(x.shape[0], kernel) @ x
    return trend, x - trend


def clamp_kernel(kernel, seq_len):
    """Largest odd kernel <= min(kernel, seq_len)."""
    k = min(kernel, seq_len)
    if k % 2 == 0:
        k -= 1
    return max(k, 1)


class _FlatHead:
    """Affine head over flattened windows, optionally channel-mixing."""

    def __init__(self, seq_len, out_len, channels, rng, channel_mixing, name):
        self.seq_len = seq_len
        self.out_len = out_len
        self.channels = channels
        self.channel_mixing = channel_mixing
        if channel_mixing:
            self.dense = Dense(seq_len * channels, out_len * channels, rng, name)
        else:
            self.dense = Dense(seq_len, out_len, rng, name)

    def forward(self, u):
        b, l, c = u.shape
        if l != self.seq_len or c != self.channels:
            raise ShapeMismatch(
                f"expected windows of shape (*, {self.seq_len}, {self.channels}), "
                f"got {u.shape}"
            )
        if self.channel_mixing:
            out = self.dense.forward(u.reshape(b, l * c))
            return out.reshape(b, self.out_len, c)
        # shared per-channel map: operate on (batch*channels, L)
        flat = u.transpose(0, 2, 1).reshape(b * c, l)
        out = self.dense.forward(flat)
        return out.reshape(b, c, self.out_len).transpose(0, 2, 1)

    def backward(self, upstream):
        b, h, c = upstream.shape
        if self.channel_mixing:
            down = self.dense.backward(upstream.reshape(b, h * c))
            return down.reshape(b, self.seq_len, c)
        flat = upstream.transpose(0, 2, 1).reshape(b * c, h)
        down = self.dense.backward(flat)
        return down.reshape(b, c, self.seq_len).transpose(0, 2, 1)

    def parameters(self):
        return self.dense.parameters()


class LinearForecaster:
    """One affine map from the input window to the forecast horizon."""

    kind = "linear"

    def __init__(self, seq_len, pred_len, channels, rng, channel_mixing=True):
        self.seq_len = seq_len
        self.pred_len = pred_len
        self.channels = channels
        self.head = _FlatHead(
            seq_len, pred_len, channels, rng, channel_mixing, "linear"
        )

    def forward(self, u, training=False):
        batch, squeeze = _as_batch(u)
        out = self.head.forward(batch)
        return out[0] if squeeze else out

    def backward(self, upstream):
        batch, squeeze = _as_batch(upstream)
        down = self.head.backward(batch)
        return down[0] if squeeze else down

    def parameters(self):
        return self.head.parameters()


class DLinearForecaster:
    """Trend/remainder decomposition with an affine head on each part."""

    kind = "dlinear"

    def __init__(
        self, seq_len, pred_len, channels, rng, kernel=25, channel_mixing=True
    ):
        self.seq_len = seq_len
        self.pred_len = pred_len
        self.channels = channels
        self.kernel = clamp_kernel(kernel, seq_len)
        self._avg = moving_average_matrix(seq_len, self.kernel)
        self.trend_head = _FlatHead(
            seq_len, pred_len, channels, rng, channel_mixing, "trend"
        )
        self.remainder_head = _FlatHead(
            seq_len, pred_len, channels, rng, channel_mixing, "remainder"
        )

    def forward(self, u, training=False):
        batch, squeeze = _as_batch(u)
        trend = np.einsum("ts,bsc->btc", self._avg, batch)
        remainder = batch - trend
        out = self.trend_head.forward(trend) + self.remainder_head.forward(remainder)
        return out[0] if squeeze else out

    def backward(self, upstream):
        batch, squeeze = _as_batch(upstream)
        d_trend = self.trend_head.backward(batch)
        d_remainder = self.remainder_head.backward(batch)
        down = (
            np.einsum("st,bsc->btc", self._avg, d_trend - d_remainder) + d_remainder
        )
        return down[0] if squeeze else down

    def parameters(self):
        return self.trend_head.parameters() + self.remainder_head.parameters()


class MlpForecaster:
    """Two hidden ReLU layers over the flattened window."""

    kind = "mlp"

    def __init__(self, seq_len, pred_len, channels, rng, hidden=128, dropout=0.0,
                 dropout_rng=None):
        self.seq_len = seq_len
        self.pred_len = pred_len
        self.channels = channels
        self.net = Mlp(
            [seq_len * channels, hidden, hidden, pred_len * channels],
            rng,
            dropout=dropout,
            dropout_rng=dropout_rng,
            name="mlp_forecaster",
        )

    def forward(self, u, training=False):
        batch, squeeze = _as_batch(u)
        b = batch.shape[0]
        if batch.shape[1] != self.seq_len or batch.shape[2] != self.channels:
            raise ShapeMismatch(
                f"expected (*, {self.seq_len}, {self.channels}), got {batch.shape}"
            )
        out = self.net.forward(batch.reshape(b, -1), training=training)
        out = out.reshape(b, self.pred_len, self.channels)
        return out[0] if squeeze else out

    def backward(self, upstream):
        batch, squeeze = _as_batch(upstream)
        b = batch.shape[0]
        down = self.net.backward(batch.reshape(b, -1))
        down = down.reshape(b, self.seq_len, self.channels)
        return down[0] if squeeze else down

    def parameters(self):
        return self.net.parameters()


class MlpImputer:
    """Reconstructs the whole window from zero-filled values plus mask."""

    kind = "mlp"

    def __init__(self, seq_len, channels, rng, hidden=128, dropout=0.0,
                 dropout_rng=None):
        self.seq_len = seq_len
        self.pred_len = seq_len
        self.channels = channels
        self.net = Mlp(
            [2 * seq_len * channels, hidden, hidden, seq_len * channels],
            rng,
            dropout=dropout,
            dropout_rng=dropout_rng,
            name="mlp_imputer",
        )

    def forward(self, u, mask, training=False):
        batch, squeeze = _as_batch(u)
        mask_batch, _ = _as_batch(mask)
        if batch.shape != mask_batch.shape:
            raise ShapeMismatch("values and mask must share a shape")
        b = batch.shape[0]
        stacked = np.concatenate(
            [batch.reshape(b, -1), mask_batch.reshape(b, -1)], axis=1
        )
        out = self.net.forward(stacked, training=training)
        out = out.reshape(b, self.seq_len, self.channels)
        return out[0] if squeeze else out

    def backward(self, upstream):
        batch, squeeze = _as_batch(upstream)
        b = batch.shape[0]
        down = self.net.backward(batch.reshape(b, -1))
        values_part = down[:, : self.seq_len * self.channels]
        down_values = values_part.reshape(b, self.seq_len, self.channels)
        return down_values[0] if squeeze else down_values

    def parameters(self):
        return self.net.parameters()


def build_forecaster(kind, seq_len, pred_len, channels, rng, **options):
    if kind == "linear":
        return LinearForecaster(seq_len, pred_len, channels, rng, **options)
    if kind == "dlinear":
        return DLinearForecaster(seq_len, pred_len, channels, rng, **options)
    if kind == "mlp":
        return MlpForecaster(seq_len, pred_len, channels, rng, **options)
    raise ValueError(f"unknown forecaster kind {kind!r}; choose from {MODEL_KINDS}")


def build_imputer(kind, seq_len, channels, rng, **options):
    if kind == "mlp":
        return MlpImputer(seq_len, channels, rng, **options)
    raise ValueError(f"unknown imputer kind {kind!r}; only 'mlp' is available")


def count_parameters(params):
    return int(sum(p.size for p in params))
