"""The three experiment protocols.

* run_pretext: leave-one-subject-out reconstruction. Per fold the autoencoder
  is trained on the held-in subjects' 1s-step windows (several repetitions
  with distinct seeds) and scored by relative MSE on the held-out subject's
  2s-step windows.
* run_downstream: few-shot activity recognition per fold, either a shallow
  classifier over the fold's frozen encoder (ssl_knn / ssl_lr) or a supervised
  network trained on the raw windows (simple / cnn_lstm); scored by macro
  one-vs-rest AUC on the held-out subject.
* run_bi: subject identification per activity with a k=20 inverse-distance
  kNN over balanced, subject-stratified 4-fold splits, on either the raw
  512-sample windows or the encoder features.

Every runner is deterministic given its base seed; per-fold training sets are
audited so the held-out subject can never leak into them, and the audit trail
(train subjects per fold, derived seeds) is echoed into the report config.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ppgssl.data.records import Dataset, STUDIED_CLASSES
from ppgssl.dsp import WindowSet, preprocess_downstream, preprocess_pretext
from ppgssl.errors import InsufficientDataError, MissingCheckpointError
from ppgssl.eval.metrics import MetricSummary, macro_ovr_auc, relative_mse, summarize
from ppgssl.eval.splits import (
    derive_seed,
    few_shot_sample,
    loso_splits,
    subject_stratified_folds,
)
from ppgssl.nn.builders import build_cnn_ae, build_cnn_lstm, build_simple_baseline
from ppgssl.nn.checkpoint import load_model, save_model
from ppgssl.nn.training import TrainConfig, encode_windows, predict, train
from ppgssl.shallow import (
    BI_NEIGHBORS,
    k_for_n,
    knn_fit,
    knn_predict_scores,
    lr_fit,
    lr_predict_scores,
)

DOWNSTREAM_METHODS = ("ssl_knn", "ssl_lr", "simple", "cnn_lstm")

PRETEXT_CFG = TrainConfig(learning_rate=0.01, decay=0.001, clipnorm=0.9,
                          batch_size=128, epochs=200, loss="mse")
BASELINE_CFG = TrainConfig(learning_rate=0.001, decay=0.0, clipnorm=0.6,
                           batch_size=128, epochs=200, loss="softmax_ce")


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    d: Optional[int]
    method: Optional[str]
    n_per_class: Optional[int]
    activity: Optional[str]
    unit_id: str
    value: float


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    details: list[ReportRow] = field(default_factory=list)
    summaries: list[tuple[dict, MetricSummary]] = field(default_factory=list)


def checkpoint_name(latent_dim: int, test_subject: int, repetition: int) -> str:
    return f"ae_d{latent_dim}_test{test_subject}_rep{repetition}.ppgm"


def _assert_no_leak(window_set: WindowSet, held_out: int, context: str) -> None:
    sids = set(window_set.subject_ids().tolist())
    if held_out in sids:
        raise AssertionError(f"{context}: held-out subject {held_out} leaked into training data")


def _merge(window_sets) -> WindowSet:
    windows = []
    for ws in window_sets:
        windows.extend(ws.windows)
    return WindowSet(tuple(windows))


def _pretext_fold_task(payload):
    """One LOSO fold: train `repetitions` autoencoders, score each on the
    held-out subject. Top-level so worker processes can unpickle it."""
    (sid, x_train, x_test, latent_dim, cfg_kwargs, seeds, ckpt_paths) = payload
    rel_values = []
    for rep, seed in enumerate(seeds):
        cfg = TrainConfig(**cfg_kwargs, seed=seed)
        model = build_cnn_ae(latent_dim)
        train(model, x_train, cfg)
        rel_values.append(relative_mse(model, x_test))
        if ckpt_paths is not None:
            save_model(model, ckpt_paths[rep])
    return sid, rel_values


def run_pretext(dataset: Dataset, latent_dim=64, repetitions=5, cfg: Optional[TrainConfig] = None,
                checkpoint_dir=None, base_seed=0, workers=1) -> ExperimentReport:
    cfg = cfg or PRETEXT_CFG
    plan = loso_splits(dataset)
    cfg_kwargs = dict(learning_rate=cfg.learning_rate, decay=cfg.decay,
                      clipnorm=cfg.clipnorm, batch_size=cfg.batch_size,
                      epochs=cfg.epochs, loss="mse")
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    fold_train_subjects = {}
    fold_seeds = {}
    for sid, train_ids in plan:
        train_ws = _merge(preprocess_pretext(dataset.record(t), "train") for t in train_ids)
        _assert_no_leak(train_ws, sid, "pretext")
        test_ws = preprocess_pretext(dataset.record(sid), "test")
        seeds = [derive_seed(base_seed, sid, rep) for rep in range(repetitions)]
        paths = None
        if checkpoint_dir is not None:
            paths = [str(checkpoint_dir / checkpoint_name(latent_dim, sid, rep))
                     for rep in range(repetitions)]
        tasks.append((sid, train_ws.matrix(), test_ws.matrix(),
                      latent_dim, cfg_kwargs, seeds, paths))
        # audit trail: the ids actually present in the training windows
        fold_train_subjects[str(sid)] = sorted(set(train_ws.subject_ids().tolist()))
        fold_seeds[str(sid)] = seeds

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pretext_fold_task, tasks))
    else:
        results = [_pretext_fold_task(t) for t in tasks]

    report = ExperimentReport(
        experiment="pretext",
        config={
            "d": latent_dim, "repetitions": repetitions, "base_seed": base_seed,
            "epochs": cfg.epochs, "learning_rate": cfg.learning_rate,
            "fold_train_subjects": fold_train_subjects, "fold_seeds": fold_seeds,
        },
    )
    per_subject = []
    for sid, rel_values in results:
        value = float(np.mean(rel_values))
        per_subject.append(value)
        report.details.append(ReportRow(
            experiment="pretext", d=latent_dim, method=None, n_per_class=None,
            activity=None, unit_id=str(sid), value=value,
        ))
    report.summaries.append((
        {"experiment": "pretext", "d": latent_dim, "method": None,
         "n_per_class": None, "activity": None},
        summarize(per_subject),
    ))
    return report


def _load_fold_encoder(checkpoint_dir, latent_dim, sid, rep):
    path = Path(checkpoint_dir) / checkpoint_name(latent_dim, sid, rep)
    if not path.exists():
        raise MissingCheckpointError(f"expected checkpoint {path}")
    return load_model(path)


def run_downstream(dataset: Dataset, method: str, n_per_class: int, latent_dim=64,
                   repetitions=5, checkpoint_dir=None, encoders=None,
                   cfg: Optional[TrainConfig] = None, base_seed=0) -> ExperimentReport:
    """Few-shot activity recognition, one value per held-out subject.

    ``encoders`` may map (test_subject, repetition) to an already-loaded
    autoencoder; otherwise ssl_* methods load checkpoints from
    ``checkpoint_dir``. The few-shot draw seed depends only on (base_seed,
    subject, repetition, n), so methods compared at the same seeds see the
    same draws.
    """
    if method not in DOWNSTREAM_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {DOWNSTREAM_METHODS}")
    plan = loso_splits(dataset)
    labeled = {rec.subject_id: preprocess_downstream(rec, dataset.code_table)
               for rec in dataset.records}
    classes = list(STUDIED_CLASSES)

    fold_train_subjects = {}
    draw_seeds = {}
    per_subject = []
    details = []
    for sid, train_ids in plan:
        pool_ws = _merge(labeled[t] for t in train_ids)
        _assert_no_leak(pool_ws, sid, "downstream")
        test_ws = labeled[sid]
        if len(test_ws) == 0:
            raise InsufficientDataError(f"subject {sid} has no labeled windows")
        test_x = test_ws.matrix()
        test_y = test_ws.labels()
        fold_train_subjects[str(sid)] = sorted(set(pool_ws.subject_ids().tolist()))
        rep_aucs = []
        seeds = []
        for rep in range(repetitions):
            seed = derive_seed(base_seed, sid, rep, n_per_class)
            seeds.append(seed)
            subset = few_shot_sample(pool_ws, n_per_class, seed, classes=classes)
            _assert_no_leak(subset, sid, "few-shot draw")
            if method in ("ssl_knn", "ssl_lr"):
                if encoders is not None:
                    encoder = encoders[(sid, rep)]
                elif checkpoint_dir is not None:
                    encoder = _load_fold_encoder(checkpoint_dir, latent_dim, sid, rep)
                else:
                    raise MissingCheckpointError(
                        "ssl methods need checkpoint_dir or encoders"
                    )
                h_train = encode_windows(encoder, subset).astype(np.float64)
                h_test = encode_windows(encoder, test_ws).astype(np.float64)
                if method == "ssl_knn":
                    knn = knn_fit(h_train, subset.labels(), k=k_for_n(n_per_class),
                                  classes=classes)
                    scores = knn_predict_scores(knn, h_test)
                else:
                    lr = lr_fit(h_train, subset.labels())
                    full = np.zeros((h_test.shape[0], len(classes)))
                    probs = lr_predict_scores(lr, h_test)
                    for j, c in enumerate(lr.classes):
                        full[:, classes.index(c)] = probs[:, j]
                    scores = full
            else:
                bcfg = cfg or BASELINE_CFG
                bcfg = TrainConfig(
                    learning_rate=bcfg.learning_rate, decay=bcfg.decay,
                    clipnorm=bcfg.clipnorm, batch_size=bcfg.batch_size,
                    epochs=bcfg.epochs, loss="softmax_ce",
                    seed=derive_seed(base_seed, sid, rep, n_per_class, 1),
                )
                model = build_simple_baseline() if method == "simple" else build_cnn_lstm()
                train(model, subset, bcfg, classes=classes)
                scores = predict(model, test_x)
            rep_aucs.append(macro_ovr_auc(scores, test_y, classes=classes))
        draw_seeds[str(sid)] = seeds
        value = float(np.mean(rep_aucs))
        per_subject.append(value)
        details.append(ReportRow(
            experiment="downstream", d=latent_dim if method.startswith("ssl") else None,
            method=method, n_per_class=n_per_class, activity=None,
            unit_id=str(sid), value=value,
        ))

    report = ExperimentReport(
        experiment="downstream",
        config={
            "method": method, "n_per_class": n_per_class, "d": latent_dim,
            "repetitions": repetitions, "base_seed": base_seed,
            "fold_train_subjects": fold_train_subjects, "draw_seeds": draw_seeds,
            "shared_draw_note": "few-shot draw seeds depend only on (base_seed, subject, rep, n), not the method",
        },
        details=details,
    )
    report.summaries.append((
        {"experiment": "downstream",
         "d": latent_dim if method.startswith("ssl") else None,
         "method": method, "n_per_class": n_per_class, "activity": None},
        summarize(per_subject),
    ))
    return report


def run_bi(dataset: Dataset, activity, representation="ssl", latent_dim=64, seed=0,
           encoder=None, cfg: Optional[TrainConfig] = None, n_folds=4,
           neighbors=BI_NEIGHBORS) -> ExperimentReport:
    """Subject identification within one activity (4-fold, k=20 kNN).

    ``representation`` is "original" (raw 512-sample windows) or "ssl"
    (features from an autoencoder trained on every subject's unlabeled
    windows; pass ``encoder`` to reuse one).
    """
    if representation not in ("original", "ssl"):
        raise ValueError(f"representation must be 'original' or 'ssl', got {representation!r}")
    table = dataset.code_table
    code = activity if isinstance(activity, int) else table.code_of(str(activity))
    if not table.is_studied(code):
        raise ValueError(f"activity {activity!r} is not in the studied subset")
    name = table.names[code]

    per_subject: dict[int, list] = {}
    dropped = []
    for rec in dataset.records:
        ws = preprocess_downstream(rec, table)
        wins = [w for w in ws if w.label == code]
        if wins:
            per_subject[rec.subject_id] = wins
        else:
            dropped.append(rec.subject_id)
    if len(per_subject) < 2:
        raise InsufficientDataError(
            f"activity {name!r} has windows for {len(per_subject)} subject(s); need >= 2"
        )

    min_count = min(len(v) for v in per_subject.values())
    rng = np.random.default_rng(derive_seed(seed, code, 1))
    balanced = []
    for sid in sorted(per_subject):
        wins = per_subject[sid]
        pick = sorted(rng.choice(len(wins), size=min_count, replace=False).tolist())
        balanced.extend(wins[i] for i in pick)
    windows = WindowSet(tuple(balanced))
    subject_ids = windows.subject_ids()

    if representation == "ssl":
        if encoder is None:
            pretext = _merge(preprocess_pretext(rec, "train") for rec in dataset.records)
            encoder = build_cnn_ae(latent_dim)
            train_cfg = cfg or PRETEXT_CFG
            train_cfg = TrainConfig(
                learning_rate=train_cfg.learning_rate, decay=train_cfg.decay,
                clipnorm=train_cfg.clipnorm, batch_size=train_cfg.batch_size,
                epochs=train_cfg.epochs, loss="mse", seed=derive_seed(seed, code, 2),
            )
            train(encoder, pretext, train_cfg)
        features = encode_windows(encoder, windows).astype(np.float64)
    else:
        features = windows.matrix().astype(np.float64)

    plan = subject_stratified_folds(subject_ids, n_folds=n_folds,
                                    seed=derive_seed(seed, code, 3))
    subjects = sorted(set(subject_ids.tolist()))
    fold_aucs = []
    details = []
    for fi, fold in enumerate(plan):
        test_idx = np.array(fold, dtype=np.int64)
        train_mask = np.ones(len(windows), dtype=bool)
        train_mask[test_idx] = False
        knn = knn_fit(features[train_mask], subject_ids[train_mask],
                      k=neighbors, classes=subjects)
        scores = knn_predict_scores(knn, features[test_idx])
        auc = macro_ovr_auc(scores, subject_ids[test_idx], classes=subjects)
        fold_aucs.append(auc)
        details.append(ReportRow(
            experiment="bi", d=latent_dim if representation == "ssl" else None,
            method=representation, n_per_class=None, activity=name,
            unit_id=f"fold{fi}", value=auc,
        ))

    report = ExperimentReport(
        experiment="bi",
        config={
            "activity": name, "activity_code": code, "representation": representation,
            "d": latent_dim, "seed": seed, "neighbors": neighbors,
            "balanced_windows_per_subject": min_count,
            "subjects": subjects, "dropped_subjects": dropped,
        },
        details=details,
    )
    report.summaries.append((
        {"experiment": "bi", "d": latent_dim if representation == "ssl" else None,
         "method": representation, "n_per_class": None, "activity": name},
        summarize(fold_aucs),
    ))
    return report
