"""Classical classifiers over latent or raw-window features.

* Multinomial logistic regression with an L2 penalty on the weights
  (mean cross-entropy + ||W||^2 / (2 C), intercepts unpenalized).
* k-nearest-neighbors with inverse-distance weighting; the neighbor count
  follows a fixed schedule keyed by the per-class training size, with a
  constant k=20 for the subject-identification probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize as _optimize

from ppgssl.errors import InsufficientDataError

# per-class training size -> neighbor count
K_SCHEDULE: dict[int, int] = {2: 8, 5: 19, 10: 39, 50: 115, 1000: 350}
BI_NEIGHBORS = 20


def k_for_n(n_per_class: int) -> int:
    if n_per_class not in K_SCHEDULE:
        raise ValueError(
            f"no neighbor count for n_per_class={n_per_class}; known sizes: "
            f"{sorted(K_SCHEDULE)}"
        )
    return K_SCHEDULE[n_per_class]


@dataclass(frozen=True)
class LrModel:
    weights: np.ndarray  # (n_classes, n_features)
    intercepts: np.ndarray  # (n_classes,)
    classes: tuple[int, ...]
    l2_strength: float
    losses: tuple[float, ...] = ()  # objective value per solver iteration


def _lr_objective(flat, x, y_onehot, n_classes, l2_strength):
    n, n_feat = x.shape
    w = flat[: n_classes * n_feat].reshape(n_classes, n_feat)
    b = flat[n_classes * n_feat :]
    logits = x @ w.T + b
    logits -= logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(logits).sum(axis=1, keepdims=True))
    log_p = logits - log_z
    loss = -np.sum(y_onehot * log_p) / n + np.sum(w * w) / (2.0 * l2_strength)
    p = np.exp(log_p)
    gw = (p - y_onehot).T @ x / n + w / l2_strength
    gb = (p - y_onehot).mean(axis=0)
    return loss, np.concatenate([gw.ravel(), gb])


def lr_fit(x, y, l2_strength=1.0, tol=1e-6, max_iter=1000) -> LrModel:
    """Fit multinomial logistic regression by L-BFGS from a zero start.

    Minimizes mean cross-entropy + ||W||^2 / (2 * l2_strength) to a projected
    gradient below ``tol`` or ``max_iter`` iterations; deterministic for fixed
    inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2:
        raise ValueError(f"expected (n, features), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    classes = sorted(set(int(v) for v in y))
    if len(classes) < 2:
        raise InsufficientDataError("logistic regression needs at least 2 classes")
    index = {c: j for j, c in enumerate(classes)}
    onehot = np.zeros((len(y), len(classes)))
    onehot[np.arange(len(y)), [index[int(v)] for v in y]] = 1.0

    losses: list[float] = []
    x0 = np.zeros(len(classes) * x.shape[1] + len(classes))
    args = (x, onehot, len(classes), float(l2_strength))
    losses.append(float(_lr_objective(x0, *args)[0]))
    result = _optimize.minimize(
        _lr_objective, x0, args=args, jac=True, method="L-BFGS-B",
        callback=lambda xk: losses.append(float(_lr_objective(xk, *args)[0])),
        options={"maxiter": max_iter, "gtol": tol, "ftol": 0.0},
    )
    flat = result.x
    n_feat = x.shape[1]
    w = flat[: len(classes) * n_feat].reshape(len(classes), n_feat)
    b = flat[len(classes) * n_feat :]
    return LrModel(
        weights=w, intercepts=b, classes=tuple(classes),
        l2_strength=float(l2_strength), losses=tuple(losses),
    )


def lr_predict_scores(model: LrModel, x) -> np.ndarray:
    """Softmax probabilities per row, columns ordered by model.classes."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != model.weights.shape[1]:
        raise ValueError(
            f"feature dimension {x.shape[1]} does not match model "
            f"({model.weights.shape[1]})"
        )
    logits = x @ model.weights.T + model.intercepts
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class KnnModel:
    points: np.ndarray  # (n, features) float64
    labels: np.ndarray  # (n,) int
    k: int
    classes: tuple[int, ...]


def knn_fit(x, y, k, classes=None) -> KnnModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] == 0:
        raise InsufficientDataError("kNN needs at least one training point")
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k={k} must be in [1, {x.shape[0]}]")
    if classes is None:
        classes = tuple(sorted(set(y.tolist())))
    return KnnModel(points=x, labels=y, k=int(k), classes=tuple(classes))


def knn_predict_scores(model: KnnModel, x) -> np.ndarray:
    """Inverse-distance-weighted class scores; rows sum to 1.

    Euclidean distances; among the k nearest (distance ties broken by stored
    index), each neighbor votes with weight 1/distance. If the query exactly
    matches stored points, the scores collapse to the label distribution over
    all zero-distance points.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.points.shape[1]:
        raise ValueError(
            f"feature dimension {x.shape[1]} does not match model "
            f"({model.points.shape[1]})"
        )
    col = {c: j for j, c in enumerate(model.classes)}
    scores = np.zeros((x.shape[0], len(model.classes)))
    for i in range(x.shape[0]):
        d2 = np.sum((model.points - x[i]) ** 2, axis=1)
        exact = d2 == 0.0
        if np.any(exact):
            for lab in model.labels[exact]:
                scores[i, col[int(lab)]] += 1.0
            scores[i] /= scores[i].sum()
            continue
        nearest = np.argsort(d2, kind="stable")[: model.k]
        weights = 1.0 / np.sqrt(d2[nearest])
        for j, lab in zip(weights, model.labels[nearest]):
            scores[i, col[int(lab)]] += j
        scores[i] /= scores[i].sum()
    return scores
