"""Seeded mini-batch training loop and frozen-encoder feature extraction.

Training is a pure function of (data order, config): the seed drives weight
initialization, epoch shuffling, and dropout, so repeated runs produce
bit-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ppgssl.dsp import Window, WindowSet
from ppgssl.errors import NonFiniteLossError
from ppgssl.nn.losses import mse_loss, softmax_ce_loss
from ppgssl.nn.model import Model
from ppgssl.nn.optim import Adam


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    decay: float = 0.001
    clipnorm: float = 0.9
    batch_size: int = 128
    epochs: int = 200
    seed: int = 0
    loss: str = "mse"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")
        if self.clipnorm <= 0:
            raise ValueError("clipnorm must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.loss not in ("mse", "softmax_ce"):
            raise ValueError(f"loss must be 'mse' or 'softmax_ce', got {self.loss!r}")


@dataclass
class TrainingHistory:
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def _as_batch_matrix(data) -> np.ndarray:
    if isinstance(data, WindowSet):
        x = data.matrix()
    else:
        x = np.asarray(data, dtype=np.float32)
    if x.ndim == 2:
        x = x[..., None]
    if x.ndim != 3:
        raise ValueError(f"expected (n, length) or (n, length, channels), got {x.shape}")
    return np.ascontiguousarray(x, dtype=np.float32)


def _onehot(labels, classes) -> np.ndarray:
    classes = list(classes)
    index = {c: j for j, c in enumerate(classes)}
    out = np.zeros((len(labels), len(classes)), dtype=np.float32)
    for i, lab in enumerate(labels):
        if int(lab) not in index:
            raise ValueError(f"label {lab} not in class list {classes}")
        out[i, index[int(lab)]] = 1.0
    return out


def train(model: Model, data, cfg: TrainConfig, classes=None,
          stop_below: Optional[float] = None, callback=None) -> TrainingHistory:
    """Train in place with Adam; returns the per-epoch mean objective.

    ``data`` is a WindowSet (labels required for the softmax_ce loss) or a raw
    array for reconstruction. ``stop_below`` optionally ends training early
    once an epoch's mean objective falls below the threshold; ``callback``
    (epoch, model, history) -> bool can end it for any other reason. Neither
    affects determinism: both see only seeded state.
    """
    x = _as_batch_matrix(data)
    n = x.shape[0]
    if n == 0:
        raise ValueError("training set is empty")
    if cfg.loss == "softmax_ce":
        if not isinstance(data, WindowSet):
            raise ValueError("softmax_ce training needs a labeled WindowSet")
        labels = data.labels()
        if classes is None:
            classes = sorted(set(labels.tolist()))
        y = _onehot(labels, classes)
    else:
        y = x

    model.initialize(np.random.default_rng([cfg.seed, 0]))
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    for i, layer in enumerate(model.layers):
        if hasattr(layer, "rng") and hasattr(layer, "rate"):
            layer.rng = np.random.default_rng([cfg.seed, 2, i])

    optimizer = Adam(cfg.learning_rate, decay=cfg.decay, clipnorm=cfg.clipnorm)
    history = TrainingHistory()
    model.train_mode()
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            xb = x[idx]
            yb = y[idx]
            out = model.forward(xb)
            if cfg.loss == "mse":
                loss, grad = mse_loss(yb, out)
            else:
                loss, grad = softmax_ce_loss(out, yb)
            reg = model.regularization_loss()
            objective = loss + reg
            if not np.isfinite(objective):
                raise NonFiniteLossError(epoch=epoch, batch=bi)
            model.backward(grad)
            for layer, pname, coef in model.l2_terms():
                layer.grads[pname] = layer.grads[pname] + 2.0 * coef * layer.params[pname]
            optimizer.step(
                (name, layer.params[p], layer.grads[p])
                for name, layer, p in model.named_params()
            )
            total += objective * len(idx)
        history.epoch_losses.append(total / n)
        if stop_below is not None and history.epoch_losses[-1] < stop_below:
            break
        if callback is not None and callback(epoch, model, history):
            break
        model.train_mode()  # callbacks may have probed in inference mode
    model.infer_mode()
    return history


def predict(model: Model, data, batch_size: int = 256) -> np.ndarray:
    """Inference-mode forward pass in memory-bounded chunks."""
    x = _as_batch_matrix(data)
    prev = model.mode
    model.infer_mode()
    try:
        outs = [model.forward(x[s : s + batch_size]) for s in range(0, x.shape[0], batch_size)]
    finally:
        model.mode = prev
    return np.concatenate(outs, axis=0)


@dataclass(frozen=True)
class Latent:
    """Encoder output for one window."""

    h: np.ndarray  # float32, shape (latent_dim,)
    subject_id: int
    label: Optional[int] = None


def encode_windows(model: Model, data, batch_size: int = 256) -> np.ndarray:
    """Run the frozen encoder over a window set; returns (n, latent_dim).

    Uses inference behavior (moving batchnorm statistics, no dropout)
    regardless of the model's mode flag and never mutates weights.
    """
    if model.encoder_len is None:
        raise ValueError("model has no encoder split; build it as an autoencoder")
    x = _as_batch_matrix(data)
    chunks = []
    for s in range(0, x.shape[0], batch_size):
        h = x[s : s + batch_size]
        for layer in model.layers[: model.encoder_len]:
            h = layer.forward(h, training=False)
        chunks.append(h.reshape(h.shape[0], -1))
    return np.concatenate(chunks, axis=0)


def encode(model: Model, window: Window) -> Latent:
    h = encode_windows(model, window.samples[None, :])[0]
    if h.size >= window.samples.size:
        raise ValueError("latent is not smaller than the window; encoder split is wrong")
    return Latent(h=h, subject_id=window.subject_id, label=window.label)
