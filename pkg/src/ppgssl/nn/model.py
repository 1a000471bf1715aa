"""Sequential model container: ordered layers, train/infer mode, encoder split."""

from __future__ import annotations

import numpy as np

from ppgssl.nn.layers import Layer


class Model:
    def __init__(self, layers, tag: str, encoder_len=None, latent_dim=None):
        self.layers: list[Layer] = list(layers)
        self.tag = tag
        self.encoder_len = encoder_len
        self.latent_dim = latent_dim
        self.mode = "train"

    def train_mode(self):
        self.mode = "train"
        return self

    def infer_mode(self):
        self.mode = "infer"
        return self

    def forward(self, x) -> np.ndarray:
        training = self.mode == "train"
        for layer in self.layers:
            x = layer.forward(x, training=training)
        return x

    def backward(self, grad_out) -> np.ndarray:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def initialize(self, rng) -> "Model":
        """Reinitialize every layer's parameters from the rng, in layer order."""
        for layer in self.layers:
            layer.init(rng)
        return self

    def named_params(self):
        """(name, layer, param_name) triples in deterministic layout order."""
        out = []
        for i, layer in enumerate(self.layers):
            for pname in layer.params:
                out.append((f"layer{i:02d}.{pname}", layer, pname))
        return out

    def named_buffers(self):
        out = []
        for i, layer in enumerate(self.layers):
            for bname in layer.buffers:
                out.append((f"layer{i:02d}.{bname}", layer, bname))
        return out

    def l2_terms(self):
        """(layer, param_name, coefficient) for every regularized tensor."""
        out = []
        for layer in self.layers:
            for pname, coef in layer.l2.items():
                out.append((layer, pname, coef))
        return out

    def regularization_loss(self) -> float:
        total = 0.0
        for layer, pname, coef in self.l2_terms():
            p = layer.params[pname]
            total += coef * float(np.sum(p.astype(np.float64) ** 2))
        return total

    def count_params(self):
        """(total, trainable, non_trainable); non-trainable = layer buffers."""
        trainable = sum(layer.params[p].size for _, layer, p in self.named_params())
        non_trainable = sum(layer.buffers[b].size for _, layer, b in self.named_buffers())
        return trainable + non_trainable, trainable, non_trainable

    def output_shapes(self, input_shape) -> list[tuple]:
        """Per-layer output shapes for a probe batch of the given shape."""
        x = np.zeros(input_shape, dtype=np.float32)
        shapes = []
        for layer in self.layers:
            x = layer.forward(x, training=False)
            shapes.append(x.shape)
        return shapes
