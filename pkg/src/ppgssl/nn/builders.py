"""Builders for the three fixed architectures.

The autoencoder keeps the same three conv-ELU-batchnorm-pool encoder blocks for
every bottleneck width; only the per-block pool factors change, with their
product fixed at 512 / latent_dim. The decoder mirrors the blocks with
upsampling factors in reverse order, so the published 64-wide variant is the
symmetric (2, 2, 2) special case.
"""

from __future__ import annotations

import numpy as np

from ppgssl.nn.layers import (
    BatchNorm1D,
    Conv1D,
    Dense,
    Dropout,
    ELU,
    LSTM,
    MaxPool1D,
    Reshape,
    Softmax,
    Tanh,
    UpSample1D,
)
from ppgssl.nn.model import Model

INPUT_LEN = 512
N_CLASSES = 5
AE_KERNEL = 32
AE_CHANNELS = (64, 128, 1)

POOL_PLANS: dict[int, tuple[int, int, int]] = {
    2: (8, 8, 4),
    8: (4, 4, 4),
    32: (4, 2, 2),
    64: (2, 2, 2),
    128: (2, 2, 1),
}


def _encoder_layers(latent_dim, dtype):
    plan = POOL_PLANS[latent_dim]
    layers = []
    cin = 1
    for cout, pool in zip(AE_CHANNELS, plan):
        layers += [
            Conv1D(cin, cout, AE_KERNEL, padding="same", dtype=dtype),
            ELU(),
            BatchNorm1D(cout, dtype=dtype),
            MaxPool1D(pool),
        ]
        cin = cout
    return layers


def build_cnn_ae(latent_dim=64, dtype=np.float32) -> Model:
    """Convolutional autoencoder for 512-sample windows, bottleneck ``latent_dim``."""
    if latent_dim not in POOL_PLANS:
        raise ValueError(
            f"unsupported latent_dim {latent_dim}; choose one of {sorted(POOL_PLANS)}"
        )
    plan = POOL_PLANS[latent_dim]
    layers = _encoder_layers(latent_dim, dtype)
    encoder_len = len(layers)
    cin = AE_CHANNELS[-1]
    for cout, factor in zip(AE_CHANNELS, reversed(plan)):
        layers += [
            Conv1D(cin, cout, AE_KERNEL, padding="same", dtype=dtype),
            ELU(),
            BatchNorm1D(cout, dtype=dtype),
            UpSample1D(factor),
        ]
        cin = cout
    model = Model(layers, tag="cnn_ae", encoder_len=encoder_len, latent_dim=latent_dim)
    return model.initialize(np.random.default_rng(0))


def build_simple_baseline(dtype=np.float32) -> Model:
    """The autoencoder's encoder trained directly as a 5-class classifier."""
    layers = _encoder_layers(64, dtype)
    layers += [
        Reshape((64,)),
        Dense(64, N_CLASSES, dtype=dtype),
        Softmax(),
    ]
    model = Model(layers, tag="simple_baseline")
    return model.initialize(np.random.default_rng(0))


def build_cnn_lstm(dtype=np.float32) -> Model:
    """Conv-tanh-batchnorm-pool front end into an LSTM, then a softmax head.

    The wide valid convolution (kernel 64) and the pool of 4 shorten 512
    samples to 112 steps; conv and LSTM kernels/biases carry an L2(0.01)
    penalty.
    """
    layers = [
        Conv1D(1, 32, 64, padding="valid", l2=0.01, dtype=dtype),
        Tanh(),
        BatchNorm1D(32, dtype=dtype),
        MaxPool1D(4),
        Dropout(0.5),
        LSTM(32, 32, l2=0.01, dtype=dtype),
        Dense(32, N_CLASSES, dtype=dtype),
        Softmax(),
    ]
    model = Model(layers, tag="cnn_lstm")
    return model.initialize(np.random.default_rng(0))


BUILDERS = {
    "cnn_ae": build_cnn_ae,
    "simple_baseline": lambda latent_dim=None, dtype=np.float32: build_simple_baseline(dtype),
    "cnn_lstm": lambda latent_dim=None, dtype=np.float32: build_cnn_lstm(dtype),
}


def build_from_tag(tag: str, latent_dim=None) -> Model:
    if tag not in BUILDERS:
        raise ValueError(f"unknown architecture tag {tag!r}")
    if tag == "cnn_ae":
        return build_cnn_ae(latent_dim if latent_dim else 64)
    return BUILDERS[tag]()
