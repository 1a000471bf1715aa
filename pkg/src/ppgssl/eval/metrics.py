"""Evaluation metrics: relative reconstruction error and macro one-vs-rest AUC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ppgssl.errors import InsufficientDataError, ZeroVarianceError
from ppgssl.nn.model import Model
from ppgssl.nn.training import predict


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    n: int
    values: tuple[float, ...]


def summarize(values) -> MetricSummary:
    """Arithmetic mean and sample standard deviation (0 for a single value)."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("cannot summarize an empty value list")
    arr = np.array(vals)
    std = float(arr.std(ddof=1)) if len(vals) > 1 else 0.0
    return MetricSummary(mean=float(arr.mean()), std=std, n=len(vals), values=tuple(vals))


def relative_mse_from_arrays(xhat, x) -> float:
    """Reconstruction MSE normalized by the population variance of the targets."""
    x = np.asarray(x)
    xhat = np.asarray(xhat)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    var = float(np.var(x.astype(np.float64)))
    if var <= 1e-24:
        raise ZeroVarianceError("test windows have zero variance")
    diff = (xhat.astype(np.float64) - x.astype(np.float64)) ** 2
    return float(diff.mean() / var)


def relative_mse(model: Model, test_windows) -> float:
    """Run the model over test windows and normalize the MSE by their variance."""
    from ppgssl.nn.training import _as_batch_matrix

    x = _as_batch_matrix(test_windows)
    if x.shape[0] == 0:
        raise InsufficientDataError("no test windows")
    xhat = predict(model, x)
    return relative_mse_from_arrays(xhat, x)


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the midpoint of their rank range."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * ((i + 1) + (j + 1))
        i = j + 1
    return ranks


def binary_auc(scores, positives) -> float:
    """ROC-AUC of a score column against a boolean positive mask (midrank ties)."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InsufficientDataError("binary AUC needs both positives and negatives")
    ranks = _midranks(scores)
    return float((ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def macro_ovr_auc(scores, labels, classes=None) -> float:
    """Macro average of per-class one-vs-rest AUC over the classes present.

    ``scores`` is (n, n_classes) with columns ordered by ``classes`` (defaults
    to column index). Classes without positives are skipped; fewer than two
    present classes is an error.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape[0] != labels.shape[0]:
        raise ValueError(f"scores {scores.shape} do not match {labels.shape[0]} labels")
    if classes is None:
        classes = list(range(scores.shape[1]))
    classes = list(classes)
    if len(classes) != scores.shape[1]:
        raise ValueError(f"{len(classes)} classes for {scores.shape[1]} score columns")
    present = [c for c in classes if np.any(labels == c)]
    if len(present) < 2:
        raise InsufficientDataError(
            f"macro AUC needs >= 2 classes present, got {present}"
        )
    per_class = [
        binary_auc(scores[:, classes.index(c)], labels == c) for c in present
    ]
    return float(np.mean(per_class))
