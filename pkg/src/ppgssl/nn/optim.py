"""Adam with per-tensor norm clipping and inverse-time learning-rate decay."""

from __future__ import annotations

import numpy as np

from ppgssl.errors import NonFiniteLossError


def clip_by_norm(grad, clipnorm):
    """Scale the tensor to L2 norm ``clipnorm`` if it exceeds it."""
    if clipnorm is None:
        return grad
    norm = float(np.sqrt(np.sum(grad.astype(np.float64) ** 2)))
    if norm > clipnorm:
        return grad * (clipnorm / norm)
    return grad


class Adam:
    """Adam update with bias correction.

    Per step: each gradient tensor is norm-clipped, the effective rate is
    lr / (1 + decay * t) with t the global update counter (0 on the first
    step), then the standard bias-corrected moment update is applied.
    """

    def __init__(self, learning_rate, decay=0.0, clipnorm=None,
                 beta1=0.9, beta2=0.999, eps=1e-7):
        self.learning_rate = learning_rate
        self.decay = decay
        self.clipnorm = clipnorm
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def effective_lr(self) -> float:
        """Learning rate the next step will use."""
        return self.learning_rate / (1.0 + self.decay * self.t)

    def step(self, named_params) -> None:
        """Apply one update to an iterable of (name, param, grad) triples."""
        lr_t = self.effective_lr()
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, param, grad in named_params:
            if not np.all(np.isfinite(grad)):
                raise NonFiniteLossError(epoch=-1, batch=-1)
            grad = clip_by_norm(grad, self.clipnorm)
            if name not in self._moments:
                self._moments[name] = (np.zeros_like(param), np.zeros_like(param))
            m, v = self._moments[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= lr_t * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
