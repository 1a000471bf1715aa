"""Split plans and seeded sampling: leave-one-subject-out folds,
subject-stratified k-fold plans, and exact per-class few-shot draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ppgssl.dsp import WindowSet
from ppgssl.errors import InsufficientDataError


def derive_seed(*parts: int) -> int:
    """Stable, well-mixed seed from integer components."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class LosoPlan:
    """One fold per subject: (held-out subject, training subjects)."""

    folds: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        test_ids = [t for t, _ in self.folds]
        if len(set(test_ids)) != len(test_ids):
            raise ValueError("duplicate test subject across folds")
        all_ids = set(test_ids)
        for test_id, train_ids in self.folds:
            if test_id in train_ids:
                raise ValueError(f"subject {test_id} appears in its own training set")
            if set(train_ids) | {test_id} != all_ids:
                raise ValueError(f"fold for subject {test_id} does not cover all subjects")

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return len(self.folds)


def loso_splits(dataset) -> LosoPlan:
    ids = sorted(dataset.subject_ids)
    if len(ids) < 2:
        raise InsufficientDataError("leave-one-subject-out needs at least 2 subjects")
    folds = tuple(
        (sid, tuple(other for other in ids if other != sid)) for sid in ids
    )
    return LosoPlan(folds)


@dataclass(frozen=True)
class FoldPlan:
    """k disjoint index folds covering 0..n_total-1."""

    folds: tuple[tuple[int, ...], ...]
    n_total: int

    def __post_init__(self):
        seen: set[int] = set()
        for fold in self.folds:
            fold_set = set(fold)
            if fold_set & seen:
                raise ValueError("folds are not disjoint")
            seen |= fold_set
        if seen != set(range(self.n_total)):
            raise ValueError("folds do not cover all indices")

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return len(self.folds)


def subject_stratified_folds(subject_ids, n_folds=4, seed=0) -> FoldPlan:
    """Deal each subject's (shuffled) indices round-robin across folds, so per
    subject the fold sizes differ by at most one."""
    subject_ids = np.asarray(subject_ids)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for sid in sorted(set(subject_ids.tolist())):
        idx = np.flatnonzero(subject_ids == sid)
        perm = rng.permutation(idx)
        for j, ind in enumerate(perm):
            folds[j % n_folds].append(int(ind))
    return FoldPlan(
        folds=tuple(tuple(sorted(f)) for f in folds), n_total=subject_ids.size
    )


def few_shot_sample(window_set: WindowSet, n_per_class: int, seed: int,
                    classes=None) -> WindowSet:
    """Draw exactly n windows per class, uniformly without replacement."""
    labels = window_set.labels()
    if classes is None:
        classes = sorted(set(labels.tolist()))
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if idx.size < n_per_class:
            raise InsufficientDataError(
                f"class {c} has {idx.size} windows, need {n_per_class}"
            )
        pick = rng.choice(idx, size=n_per_class, replace=False)
        chosen.extend(int(p) for p in pick)
    chosen.sort()
    return WindowSet(tuple(window_set.windows[i] for i in chosen))
