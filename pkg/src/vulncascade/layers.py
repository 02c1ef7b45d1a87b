"""Layer forward/backward math for the two network architectures.

Everything runs on float64 numpy arrays.  Each layer caches what its backward
pass needs, accumulates parameter gradients in-place, and returns the gradient
with respect to its input, so a network is just an ordered list of layers.
Forward and backward are pure given (input, parameters); only the optimizer
mutates parameters.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BatchTooSmallError,
    IdOutOfRangeError,
    InputTooShortError,
    ShapeMismatchError,
)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def softmax(x: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, shifted by the row max for stability."""
    shifted = x - np.max(x, axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=-1, keepdims=True)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base: a layer owns its parameters and their gradient buffers."""

    def params(self) -> list[tuple[str, np.ndarray]]:
        return []

    def grads(self) -> list[tuple[str, np.ndarray]]:
        return []

    def state(self) -> list[tuple[str, np.ndarray]]:
        """Non-trainable arrays that still persist with the model."""
        return []

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        return self.params() + self.state()

    def zero_grad(self) -> None:
        for _, g in self.grads():
            g.fill(0.0)

    def forward(self, x, training: bool = False):
        raise NotImplementedError

    def backward(self, upstream):
        raise NotImplementedError


class Embedding(Layer):
    """Lookup table mapping token ids to dense vectors.

    Rows are drawn uniformly from +-0.05.  The padding id 0 is an ordinary row.
    """

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator):
        self.vocab_size = vocab_size
        self.dim = dim
        self.table = rng.uniform(-0.05, 0.05, size=(vocab_size, dim))
        self.d_table = np.zeros_like(self.table)
        self._ids = None

    def params(self):
        return [("table", self.table)]

    def grads(self):
        return [("table", self.d_table)]

    def forward(self, ids, training: bool = False):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise IdOutOfRangeError(
                f"token id outside embedding table of {self.vocab_size} rows"
            )
        self._ids = ids
        return self.table[ids]

    def backward(self, upstream):
        # repeated ids accumulate; there is no gradient for the ids themselves
        np.add.at(self.d_table, self._ids.ravel(),
                  upstream.reshape(-1, self.dim))
        return None


class Conv1D(Layer):
    """Valid (no padding), stride-1 temporal convolution: (B,L,C) -> (B,L-k+1,F)."""

    def __init__(self, in_channels: int, filters: int, kernel_size: int,
                 rng: np.random.Generator):
        self.in_channels = in_channels
        self.filters = filters
        self.kernel_size = kernel_size
        fan_in = in_channels * kernel_size
        fan_out = filters * kernel_size
        self.weights = glorot_uniform(rng, (filters, in_channels, kernel_size),
                                      fan_in, fan_out)
        self.bias = np.zeros(filters)
        self.d_weights = np.zeros_like(self.weights)
        self.d_bias = np.zeros_like(self.bias)
        self._x = None

    def params(self):
        return [("weights", self.weights), ("bias", self.bias)]

    def grads(self):
        return [("weights", self.d_weights), ("bias", self.d_bias)]

    def forward(self, x, training: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ShapeMismatchError(
                f"conv1d expects (B, L, {self.in_channels}), got {x.shape}"
            )
        if x.shape[1] < self.kernel_size:
            raise InputTooShortError(
                f"sequence length {x.shape[1]} < kernel size {self.kernel_size}"
            )
        self._x = x
        # patches[b, t, c, j] = x[b, t + j, c]
        patches = sliding_window_view(x, self.kernel_size, axis=1)
        return np.tensordot(patches, self.weights, axes=([2, 3], [1, 2])) + self.bias

    def backward(self, upstream):
        x = self._x
        k = self.kernel_size
        l_out = x.shape[1] - k + 1
        patches = sliding_window_view(x, k, axis=1)
        self.d_bias += upstream.sum(axis=(0, 1))
        self.d_weights += np.tensordot(upstream, patches, axes=([0, 1], [0, 1]))
        dx = np.zeros_like(x)
        for j in range(k):
            dx[:, j:j + l_out, :] += upstream @ self.weights[:, :, j]
        return dx


class MaxPool1D(Layer):
    """Max over sliding windows along the time axis; (B,L,C) -> (B,L',C).

    Backward routes each upstream value to the first argmax position of its
    window, so total gradient mass is conserved.
    """

    def __init__(self, window: int = 2, stride: int = 2):
        self.window = window
        self.stride = stride
        self._arg = None
        self._in_shape = None

    def forward(self, x, training: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ShapeMismatchError(f"maxpool1d expects (B, L, C), got {x.shape}")
        if x.shape[1] < self.window:
            raise InputTooShortError(
                f"sequence length {x.shape[1]} < pool window {self.window}"
            )
        windows = sliding_window_view(x, self.window, axis=1)[:, ::self.stride]
        self._arg = windows.argmax(axis=-1)
        self._in_shape = x.shape
        return windows.max(axis=-1)

    def backward(self, upstream):
        b, l_out, c = upstream.shape
        dx = np.zeros(self._in_shape)
        bi, ti, ci = np.indices((b, l_out, c))
        np.add.at(dx, (bi, ti * self.stride + self._arg, ci), upstream)
        return dx


class LSTM(Layer):
    """Standard LSTM over (B, L, D) input with H cells.

    Gate blocks inside the packed 4H weight rows are ordered [input, forget,
    candidate, output]; that ordering is part of the serialized format.
    Initial hidden and cell state are zero.  Returns the full hidden sequence
    (B, L, H) or only the last step (B, H).
    """

    def __init__(self, input_dim: int, units: int, rng: np.random.Generator,
                 return_sequences: bool = False):
        self.input_dim = input_dim
        self.units = units
        self.return_sequences = return_sequences
        h = units
        self.w_in = glorot_uniform(rng, (4 * h, input_dim), input_dim, 4 * h)
        self.w_rec = glorot_uniform(rng, (4 * h, h), h, 4 * h)
        self.bias = np.zeros(4 * h)
        self.d_w_in = np.zeros_like(self.w_in)
        self.d_w_rec = np.zeros_like(self.w_rec)
        self.d_bias = np.zeros_like(self.bias)
        self._cache = None

    def params(self):
        return [("w_in", self.w_in), ("w_rec", self.w_rec), ("bias", self.bias)]

    def grads(self):
        return [("w_in", self.d_w_in), ("w_rec", self.d_w_rec), ("bias", self.d_bias)]

    def forward(self, x, training: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.input_dim:
            raise ShapeMismatchError(
                f"lstm expects (B, L, {self.input_dim}), got {x.shape}"
            )
        b, length, _ = x.shape
        h_dim = self.units
        h = np.zeros((b, h_dim))
        c = np.zeros((b, h_dim))
        steps = []
        outputs = np.zeros((b, length, h_dim))
        for t in range(length):
            z = x[:, t] @ self.w_in.T + h @ self.w_rec.T + self.bias
            gi = sigmoid(z[:, 0 * h_dim:1 * h_dim])
            gf = sigmoid(z[:, 1 * h_dim:2 * h_dim])
            gg = np.tanh(z[:, 2 * h_dim:3 * h_dim])
            go = sigmoid(z[:, 3 * h_dim:4 * h_dim])
            c_new = gf * c + gi * gg
            tc = np.tanh(c_new)
            h_new = go * tc
            steps.append((x[:, t], h, c, gi, gf, gg, go, tc))
            h, c = h_new, c_new
            outputs[:, t] = h_new
        self._cache = (steps, x.shape)
        return outputs if self.return_sequences else outputs[:, -1]

    def backward(self, upstream):
        steps, (b, length, _) = self._cache
        h_dim = self.units
        dx = np.zeros((b, length, self.input_dim))
        dh_next = np.zeros((b, h_dim))
        dc_next = np.zeros((b, h_dim))
        for t in reversed(range(length)):
            x_t, h_prev, c_prev, gi, gf, gg, go, tc = steps[t]
            if self.return_sequences:
                dh = upstream[:, t] + dh_next
            else:
                dh = dh_next + (upstream if t == length - 1 else 0.0)
            do = dh * tc
            dc = dc_next + dh * go * (1.0 - tc * tc)
            di = dc * gg
            df = dc * c_prev
            dg = dc * gi
            dz = np.concatenate(
                [di * gi * (1.0 - gi),
                 df * gf * (1.0 - gf),
                 dg * (1.0 - gg * gg),
                 do * go * (1.0 - go)],
                axis=1,
            )
            self.d_w_in += dz.T @ x_t
            self.d_w_rec += dz.T @ h_prev
            self.d_bias += dz.sum(axis=0)
            dx[:, t] = dz @ self.w_in
            dh_next = dz @ self.w_rec
            dc_next = dc * gf
        return dx


class BatchNorm1D(Layer):
    """Per-feature batch normalization with running statistics.

    Accepts (B, F) or (B, L, F); sequence input is normalized per channel over
    batch and time jointly.  Training mode uses batch statistics (biased
    variance) and updates the running estimates; eval mode uses the running
    estimates only.
    """

    def __init__(self, features: int, momentum: float = 0.9, eps: float = 1e-5):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.features = features
        self.momentum = momentum
        self.eps = eps
        self.gamma = np.ones(features)
        self.beta = np.zeros(features)
        self.running_mean = np.zeros(features)
        self.running_var = np.ones(features)
        self.d_gamma = np.zeros_like(self.gamma)
        self.d_beta = np.zeros_like(self.beta)
        self._cache = None

    def params(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def grads(self):
        return [("gamma", self.d_gamma), ("beta", self.d_beta)]

    def state(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def forward(self, x, training: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.features:
            raise ShapeMismatchError(
                f"batchnorm expects trailing dim {self.features}, got {x.shape}"
            )
        shape = x.shape
        flat = x.reshape(-1, self.features)
        if training:
            if flat.shape[0] < 2:
                raise BatchTooSmallError(
                    "batch statistics need at least 2 rows in training mode"
                )
            mean = flat.mean(axis=0)
            var = flat.var(axis=0)
            self.running_mean *= self.momentum
            self.running_mean += (1.0 - self.momentum) * mean
            self.running_var *= self.momentum
            self.running_var += (1.0 - self.momentum) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (flat - mean) * inv_std
        self._cache = (xhat, inv_std, shape, training)
        return (self.gamma * xhat + self.beta).reshape(shape)

    def backward(self, upstream):
        xhat, inv_std, shape, training = self._cache
        dy = upstream.reshape(-1, self.features)
        self.d_gamma += (dy * xhat).sum(axis=0)
        self.d_beta += dy.sum(axis=0)
        if training:
            dx = self.gamma * inv_std * (
                dy - dy.mean(axis=0) - xhat * (dy * xhat).mean(axis=0)
            )
        else:
            dx = dy * self.gamma * inv_std
        return dx.reshape(shape)


class Dense(Layer):
    """Affine map (B, I) -> (B, O) with weights stored as (O, I)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.in_features = in_features
        self.out_features = out_features
        self.weights = glorot_uniform(rng, (out_features, in_features),
                                      in_features, out_features)
        self.bias = np.zeros(out_features)
        self.d_weights = np.zeros_like(self.weights)
        self.d_bias = np.zeros_like(self.bias)
        self._x = None

    def params(self):
        return [("weights", self.weights), ("bias", self.bias)]

    def grads(self):
        return [("weights", self.d_weights), ("bias", self.d_bias)]

    def forward(self, x, training: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeMismatchError(
                f"dense expects (B, {self.in_features}), got {x.shape}"
            )
        self._x = x
        return x @ self.weights.T + self.bias

    def backward(self, upstream):
        self.d_weights += upstream.T @ self._x
        self.d_bias += upstream.sum(axis=0)
        return upstream @ self.weights


class Flatten(Layer):
    def __init__(self):
        self._shape = None

    def forward(self, x, training: bool = False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, upstream):
        return upstream.reshape(self._shape)


ACTIVATION_KINDS = ("relu", "tanh", "sigmoid", "softmax", "scaled_tanh")


class Activation(Layer):
    """Elementwise nonlinearity; softmax acts over the last axis.

    scaled_tanh is (tanh(x) + 1) / 2, a tanh unit remapped onto (0, 1).
    """

    def __init__(self, kind: str):
        if kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {kind!r}, expected one of {ACTIVATION_KINDS}")
        self.kind = kind
        self._x = None
        self._y = None

    def forward(self, x, training: bool = False):
        x = np.asarray(x, dtype=np.float64)
        self._x = x
        if self.kind == "relu":
            y = relu(x)
        elif self.kind == "tanh":
            y = np.tanh(x)
        elif self.kind == "sigmoid":
            y = sigmoid(x)
        elif self.kind == "scaled_tanh":
            y = (np.tanh(x) + 1.0) / 2.0
        else:
            y = softmax(x)
        self._y = y
        return y

    def backward(self, upstream):
        y = self._y
        if self.kind == "relu":
            return upstream * (self._x > 0)
        if self.kind == "tanh":
            return upstream * (1.0 - y * y)
        if self.kind == "sigmoid":
            return upstream * y * (1.0 - y)
        if self.kind == "scaled_tanh":
            return upstream * 2.0 * y * (1.0 - y)
        # softmax jacobian-vector product, rows independent
        inner = np.sum(upstream * y, axis=-1, keepdims=True)
        return y * (upstream - inner)
