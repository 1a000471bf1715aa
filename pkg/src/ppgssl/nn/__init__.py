from ppgssl.nn.layers import (
    BatchNorm1D,
    Conv1D,
    Dense,
    Dropout,
    ELU,
    LSTM,
    Layer,
    MaxPool1D,
    Reshape,
    Softmax,
    Tanh,
    UpSample1D,
)
from ppgssl.nn.losses import mse_loss, softmax_ce_loss
from ppgssl.nn.optim import Adam, clip_by_norm
from ppgssl.nn.model import Model
from ppgssl.nn.builders import (
    POOL_PLANS,
    build_cnn_ae,
    build_cnn_lstm,
    build_from_tag,
    build_simple_baseline,
)
from ppgssl.nn.checkpoint import load_model, save_model
from ppgssl.nn.training import (
    Latent,
    TrainConfig,
    TrainingHistory,
    encode,
    encode_windows,
    predict,
    train,
)

__all__ = [
    "Adam",
    "BatchNorm1D",
    "Conv1D",
    "Dense",
    "Dropout",
    "ELU",
    "LSTM",
    "Latent",
    "Layer",
    "MaxPool1D",
    "Model",
    "POOL_PLANS",
    "Reshape",
    "Softmax",
    "Tanh",
    "TrainConfig",
    "TrainingHistory",
    "UpSample1D",
    "build_cnn_ae",
    "build_cnn_lstm",
    "build_from_tag",
    "build_simple_baseline",
    "clip_by_norm",
    "encode",
    "encode_windows",
    "load_model",
    "mse_loss",
    "predict",
    "save_model",
    "softmax_ce_loss",
    "train",
]
