"""Differentiable 1D layers on plain numpy arrays.

Every layer implements ``forward(x, training)`` and ``backward(grad_out)``;
the backward pass consumes activations cached by the most recent forward and
fills ``self.grads`` for its trainable tensors. Arrays are (batch, length,
channels) for the signal path and (batch, features) after flattening. Layers
compute in the dtype of their parameters (float32 for training, float64 for
gradient checking).
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def glorot_uniform(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    """Base class: parameter/gradient/buffer dicts plus the forward/backward pair."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.l2: dict[str, float] = {}
        self._cache = None

    def init(self, rng) -> None:
        """Reinitialize trainable parameters in place (default: nothing to do)."""

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


def _corr1d(x, kernel, pad_left, pad_right):
    """Valid cross-correlation of the padded input with the kernel.

    x: (B, L, Cin), kernel: (k, Cin, Cout) -> (B, L + pads - k + 1, Cout).
    One batched GEMM per kernel tap over contiguous slices; no im2col buffer.
    """
    k, _, cout = kernel.shape
    xp = np.pad(x, ((0, 0), (pad_left, pad_right), (0, 0)))
    out_len = xp.shape[1] - k + 1
    out = np.matmul(xp[:, 0:out_len, :], kernel[0])
    tmp = np.empty_like(out)
    for t in range(1, k):
        np.matmul(xp[:, t : t + out_len, :], kernel[t], out=tmp)
        out += tmp
    return out


def _corr1d_kernel_grad(x, grad_out, k, pad_left, pad_right):
    """Gradient of _corr1d wrt the kernel: (k, Cin, Cout)."""
    _, out_len, cout = grad_out.shape
    cin = x.shape[2]
    xp = np.pad(x, ((0, 0), (pad_left, pad_right), (0, 0)))
    grad = np.empty((k, cin, cout), dtype=x.dtype)
    per_item = np.empty((x.shape[0], cin, cout), dtype=x.dtype)
    for t in range(k):
        np.matmul(xp[:, t : t + out_len, :].transpose(0, 2, 1), grad_out, out=per_item)
        grad[t] = per_item.sum(axis=0)
    return grad


def _corr1d_input_grad(grad_out, kernel, in_len, pad_left):
    """Gradient of _corr1d wrt the input: scatter each tap back onto the pad grid."""
    k = kernel.shape[0]
    batch, out_len, _ = grad_out.shape
    padded = np.zeros((batch, in_len + k - 1, kernel.shape[1]), dtype=grad_out.dtype)
    tmp = np.empty((batch, out_len, kernel.shape[1]), dtype=grad_out.dtype)
    for t in range(k):
        np.matmul(grad_out, kernel[t].T, out=tmp)
        padded[:, t : t + out_len, :] += tmp
    return padded[:, pad_left : pad_left + in_len, :]


class Conv1D(Layer):
    """Stride-1 1D convolution (cross-correlation), same or valid padding.

    Same padding splits the k-1 zeros as floor((k-1)/2) left, ceil((k-1)/2)
    right, so even kernels put the extra zero on the right.
    """

    def __init__(self, in_channels, out_channels, kernel_size, padding="same",
                 l2=0.0, dtype=np.float32):
        super().__init__()
        if padding not in ("same", "valid"):
            raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.padding = padding
        self.params = {
            "kernel": np.zeros((kernel_size, in_channels, out_channels), dtype=dtype),
            "bias": np.zeros(out_channels, dtype=dtype),
        }
        if l2:
            self.l2 = {"kernel": float(l2), "bias": float(l2)}

    def init(self, rng):
        k, cin, cout = self.params["kernel"].shape
        self.params["kernel"][...] = glorot_uniform(
            rng, (k, cin, cout), fan_in=k * cin, fan_out=k * cout,
            dtype=self.params["kernel"].dtype,
        )
        self.params["bias"][...] = 0.0

    def _pads(self):
        if self.padding == "same":
            return (self.kernel_size - 1) // 2, self.kernel_size // 2
        return 0, 0

    def forward(self, x, training=False):
        if x.shape[2] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[2]}")
        pl, pr = self._pads()
        if x.shape[1] + pl + pr < self.kernel_size:
            raise ValueError(
                f"input length {x.shape[1]} too short for kernel {self.kernel_size}"
            )
        y = _corr1d(x, self.params["kernel"], pl, pr)
        y += self.params["bias"]
        if training:
            self._cache = x
        return y

    def backward(self, grad_out):
        x = self._cache
        if x is None:
            raise RuntimeError("backward called without a cached forward")
        k = self.kernel_size
        pl, pr = self._pads()
        self.grads["bias"] = grad_out.sum(axis=(0, 1))
        self.grads["kernel"] = _corr1d_kernel_grad(x, grad_out, k, pl, pr)
        return _corr1d_input_grad(grad_out, self.params["kernel"], x.shape[1], pl)


class ELU(Layer):
    """Exponential linear unit: x for x > 0, alpha*(exp(x) - 1) otherwise."""

    def __init__(self, alpha=1.0):
        super().__init__()
        self.alpha = alpha

    def forward(self, x, training=False):
        neg = self.alpha * np.expm1(np.minimum(x, 0.0))
        y = np.where(x > 0, x, neg)
        if training:
            self._cache = (x, y)
        return y

    def backward(self, grad_out):
        x, y = self._cache
        return grad_out * np.where(x > 0, 1.0, y + self.alpha)


class Tanh(Layer):
    def forward(self, x, training=False):
        y = np.tanh(x)
        if training:
            self._cache = y
        return y

    def backward(self, grad_out):
        y = self._cache
        return grad_out * (1.0 - y * y)


class BatchNorm1D(Layer):
    """Per-channel normalization over (batch, length) with moving statistics.

    Train mode normalizes with batch statistics (biased variance) and updates
    the moving mean/variance buffers; inference normalizes with the buffers.
    """

    def __init__(self, channels, momentum=0.99, eps=1e-3, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.params = {
            "gamma": np.ones(channels, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self.buffers = {
            "moving_mean": np.zeros(channels, dtype=dtype),
            "moving_var": np.ones(channels, dtype=dtype),
        }

    def init(self, rng):
        self.params["gamma"][...] = 1.0
        self.params["beta"][...] = 0.0
        self.buffers["moving_mean"][...] = 0.0
        self.buffers["moving_var"][...] = 1.0

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[2] != self.channels:
            raise ValueError(f"expected (batch, length, {self.channels}), got {x.shape}")
        if training:
            if x.shape[0] * x.shape[1] < 2:
                raise ValueError("batch statistics need at least 2 values per channel")
            mean = x.mean(axis=(0, 1))
            var = x.var(axis=(0, 1))
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv
            m = self.momentum
            self.buffers["moving_mean"][...] = m * self.buffers["moving_mean"] + (1 - m) * mean
            self.buffers["moving_var"][...] = m * self.buffers["moving_var"] + (1 - m) * var
            self._cache = ("train", xhat, inv)
        else:
            inv = 1.0 / np.sqrt(self.buffers["moving_var"] + self.eps)
            xhat = (x - self.buffers["moving_mean"]) * inv
            self._cache = ("infer", xhat, inv)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, grad_out):
        mode, xhat, inv = self._cache
        self.grads["gamma"] = (grad_out * xhat).sum(axis=(0, 1))
        self.grads["beta"] = grad_out.sum(axis=(0, 1))
        dxhat = grad_out * self.params["gamma"]
        if mode == "infer":
            return dxhat * inv
        n = xhat.shape[0] * xhat.shape[1]
        return (inv / n) * (
            n * dxhat
            - dxhat.sum(axis=(0, 1))
            - xhat * (dxhat * xhat).sum(axis=(0, 1))
        )


class MaxPool1D(Layer):
    """Non-overlapping window maxima; a trailing remainder is truncated."""

    def __init__(self, pool=2):
        super().__init__()
        if pool < 1:
            raise ValueError("pool size must be >= 1")
        self.pool = pool

    def forward(self, x, training=False):
        batch, length, ch = x.shape
        n_out = length // self.pool
        trimmed = x[:, : n_out * self.pool].reshape(batch, n_out, self.pool, ch)
        idx = trimmed.argmax(axis=2)
        y = np.take_along_axis(trimmed, idx[:, :, None, :], axis=2)[:, :, 0, :]
        if training:
            self._cache = (idx, x.shape)
        return y

    def backward(self, grad_out):
        idx, in_shape = self._cache
        batch, length, ch = in_shape
        n_out = length // self.pool
        dx = np.zeros(in_shape, dtype=grad_out.dtype)
        dview = dx[:, : n_out * self.pool].reshape(batch, n_out, self.pool, ch)
        np.put_along_axis(dview, idx[:, :, None, :], grad_out[:, :, None, :], axis=2)
        return dx


class UpSample1D(Layer):
    """Repeat every time step ``factor`` times."""

    def __init__(self, factor=2):
        super().__init__()
        if factor < 1:
            raise ValueError("factor must be >= 1")
        self.factor = factor

    def forward(self, x, training=False):
        if training:
            self._cache = x.shape
        return np.repeat(x, self.factor, axis=1)

    def backward(self, grad_out):
        batch, length, ch = self._cache
        return grad_out.reshape(batch, length, self.factor, ch).sum(axis=2)


class Reshape(Layer):
    """Reshape the non-batch dimensions to a fixed target."""

    def __init__(self, target_shape):
        super().__init__()
        self.target_shape = tuple(target_shape)

    def forward(self, x, training=False):
        if training:
            self._cache = x.shape
        return x.reshape((x.shape[0],) + self.target_shape)

    def backward(self, grad_out):
        return grad_out.reshape(self._cache)


class Dense(Layer):
    """Affine map on flattened features: y = x @ kernel + bias."""

    def __init__(self, in_features, units, l2=0.0, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.units = units
        self.params = {
            "kernel": np.zeros((in_features, units), dtype=dtype),
            "bias": np.zeros(units, dtype=dtype),
        }
        if l2:
            self.l2 = {"kernel": float(l2), "bias": float(l2)}

    def init(self, rng):
        self.params["kernel"][...] = glorot_uniform(
            rng, (self.in_features, self.units),
            fan_in=self.in_features, fan_out=self.units,
            dtype=self.params["kernel"].dtype,
        )
        self.params["bias"][...] = 0.0

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"expected (batch, {self.in_features}), got {x.shape}")
        if training:
            self._cache = x
        return x @ self.params["kernel"] + self.params["bias"]

    def backward(self, grad_out):
        x = self._cache
        self.grads["kernel"] = x.T @ grad_out
        self.grads["bias"] = grad_out.sum(axis=0)
        return grad_out @ self.params["kernel"].T


class Softmax(Layer):
    """Row-stochastic softmax over the last axis."""

    def forward(self, x, training=False):
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        p = e / e.sum(axis=-1, keepdims=True)
        if training:
            self._cache = p
        return p

    def backward(self, grad_out):
        p = self._cache
        return p * (grad_out - (grad_out * p).sum(axis=-1, keepdims=True))


class Dropout(Layer):
    """Inverted dropout: zero with probability ``rate`` and rescale survivors.

    Identity at inference and at rate 0. The rng is reseeded by the training
    loop so runs are reproducible.
    """

    def __init__(self, rate=0.5, rng=None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError("rate must be in [0, 1)")
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._cache = None
            return x
        keep = 1.0 - self.rate
        mask = (self.rng.random(x.shape) >= self.rate).astype(x.dtype) / keep
        self._cache = mask
        return x * mask

    def backward(self, grad_out):
        if self._cache is None:
            return grad_out
        return grad_out * self._cache


class LSTM(Layer):
    """Single LSTM layer returning the final time step's output.

    Gate order is (input, forget, candidate, output); input/forget/output use
    the logistic sigmoid, the candidate and the cell output use tanh. The
    backward pass is full backpropagation through time.
    """

    def __init__(self, in_features, units, l2=0.0, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.units = units
        self.params = {
            "kernel": np.zeros((in_features, 4 * units), dtype=dtype),
            "recurrent": np.zeros((units, 4 * units), dtype=dtype),
            "bias": np.zeros(4 * units, dtype=dtype),
        }
        if l2:
            self.l2 = {"kernel": float(l2), "bias": float(l2)}

    def init(self, rng):
        u = self.units
        dtype = self.params["kernel"].dtype
        self.params["kernel"][...] = glorot_uniform(
            rng, (self.in_features, 4 * u), fan_in=self.in_features, fan_out=4 * u, dtype=dtype
        )
        self.params["recurrent"][...] = glorot_uniform(
            rng, (u, 4 * u), fan_in=u, fan_out=4 * u, dtype=dtype
        )
        self.params["bias"][...] = 0.0

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[2] != self.in_features:
            raise ValueError(f"expected (batch, time, {self.in_features}), got {x.shape}")
        batch, steps, _ = x.shape
        u = self.units
        kernel, recurrent, bias = (
            self.params["kernel"], self.params["recurrent"], self.params["bias"],
        )
        h = np.zeros((batch, u), dtype=x.dtype)
        c = np.zeros((batch, u), dtype=x.dtype)
        trace = []
        for t in range(steps):
            xt = x[:, t, :]
            z = xt @ kernel + h @ recurrent + bias
            gi = _sigmoid(z[:, :u])
            gf = _sigmoid(z[:, u : 2 * u])
            gg = np.tanh(z[:, 2 * u : 3 * u])
            go = _sigmoid(z[:, 3 * u :])
            c_new = gf * c + gi * gg
            h_new = go * np.tanh(c_new)
            if training:
                trace.append((xt, h, c, gi, gf, gg, go, c_new))
            h, c = h_new, c_new
        if training:
            self._cache = (trace, x.shape)
        return h

    def backward(self, grad_out):
        trace, in_shape = self._cache
        u = self.units
        kernel, recurrent = self.params["kernel"], self.params["recurrent"]
        d_kernel = np.zeros_like(kernel)
        d_recurrent = np.zeros_like(recurrent)
        d_bias = np.zeros_like(self.params["bias"])
        dx = np.zeros(in_shape, dtype=grad_out.dtype)
        dh = grad_out
        dc = np.zeros_like(grad_out)
        for t in range(len(trace) - 1, -1, -1):
            xt, h_prev, c_prev, gi, gf, gg, go, c_new = trace[t]
            tc = np.tanh(c_new)
            d_go = dh * tc
            dc = dc + dh * go * (1.0 - tc * tc)
            d_gi = dc * gg
            d_gf = dc * c_prev
            d_gg = dc * gi
            dz = np.concatenate(
                [
                    d_gi * gi * (1.0 - gi),
                    d_gf * gf * (1.0 - gf),
                    d_gg * (1.0 - gg * gg),
                    d_go * go * (1.0 - go),
                ],
                axis=1,
            )
            d_kernel += xt.T @ dz
            d_recurrent += h_prev.T @ dz
            d_bias += dz.sum(axis=0)
            dx[:, t, :] = dz @ kernel.T
            dh = dz @ recurrent.T
            dc = dc * gf
        self.grads["kernel"] = d_kernel
        self.grads["recurrent"] = d_recurrent
        self.grads["bias"] = d_bias
        return dx
