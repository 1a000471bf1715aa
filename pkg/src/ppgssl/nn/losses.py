"""Training losses: reconstruction MSE and categorical cross-entropy.

Both return (scalar loss, gradient wrt the prediction). The batch mean is
folded into the gradient, so layer backwards stay pure chain rule.
"""

from __future__ import annotations

import numpy as np


def mse_loss(x, xhat):
    """Mean over the batch of the per-window mean squared error.

    loss = (1/N) * sum_i (1/T) * ||x_i - xhat_i||^2, gradient taken wrt xhat.
    """
    x = np.asarray(x)
    xhat = np.asarray(xhat)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    n = x.shape[0]
    per_sample = int(np.prod(x.shape[1:])) if x.ndim > 1 else 1
    diff = xhat - x
    loss = float(np.sum(diff * diff, dtype=np.float64) / (n * per_sample))
    grad = diff * (2.0 / (n * per_sample))
    return loss, grad


def softmax_ce_loss(pred, onehot, from_logits=False, row_sum_tol=1e-3):
    """Mean categorical cross-entropy.

    ``pred`` is either a row-stochastic probability matrix (validated to
    ``row_sum_tol``) or raw logits with ``from_logits=True``. Returns the mean
    loss and its gradient wrt ``pred``.
    """
    pred = np.asarray(pred)
    onehot = np.asarray(onehot)
    if pred.shape != onehot.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {onehot.shape}")
    n = pred.shape[0]
    if from_logits:
        shifted = pred - pred.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_p = shifted - log_z
        loss = float(-np.sum(onehot * log_p, dtype=np.float64) / n)
        grad = (np.exp(log_p) - onehot) / n
        return loss, grad
    row_sums = pred.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > row_sum_tol):
        worst = float(np.abs(row_sums - 1.0).max())
        raise ValueError(f"probability rows must sum to 1 (worst deviation {worst:.2e})")
    p = np.clip(pred, 1e-12, None)
    loss = float(-np.sum(onehot * np.log(p), dtype=np.float64) / n)
    grad = -(onehot / p) / n
    return loss, grad
