"""Command-line surface.

Subcommands: synth, convert-verify, pretrain, downstream, baseline, bi,
report. Every run writes a manifest.json (resolved config, seeds, sha256 of
each artifact) next to its outputs. Exit codes: 0 success, 1 runtime failure,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from ppgssl.data.io import load_dataset, read_subject, subject_filename, write_subject
from ppgssl.data.synthetic import SyntheticConfig, synthesize_subject
from ppgssl.errors import (
    InterchangeFormatError,
    InsufficientDataError,
    InvalidRecordError,
    MissingCheckpointError,
    NonFiniteLossError,
)
from ppgssl.eval.experiments import run_bi, run_downstream, run_pretext
from ppgssl.eval.reports import merge_reports, write_detail_csv, write_summary_csv
from ppgssl.nn.checkpoint import load_model
from ppgssl.nn.training import TrainConfig

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, seeds, artifacts) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seeds": list(seeds),
        "artifacts": {name: _sha256(out_dir / name) for name in sorted(artifacts)},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Flat key=value config file; command-line flags take precedence."""
    if "--config" not in argv:
        return argv
    cfg_path = Path(argv[argv.index("--config") + 1])
    types = {}
    for action in parser._actions:
        if action.dest not in ("help", "config"):
            types[action.dest] = action.type or str
    defaults = {}
    for line in cfg_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in types:
            raise ValueError(f"unknown config key {key!r} in {cfg_path}")
        defaults[key] = types[key](value.strip())
    parser.set_defaults(**defaults)
    return argv


def _resolve_workers(args) -> int:
    env = os.environ.get("PPGSSL_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, getattr(args, "workers", 1))


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    schedule = SyntheticConfig().activity_schedule
    if args.schedule:
        schedule = tuple(
            (int(code), float(dur))
            for code, dur in (part.split(":") for part in args.schedule.split(","))
        )
    cfg = SyntheticConfig(
        n_subjects=args.subjects, duration_s=args.duration,
        fs_ppg=args.fs_ppg, fs_lab=args.fs_lab,
        activity_schedule=schedule, seed=args.seed,
    )
    names = []
    for sid in range(1, cfg.n_subjects + 1):
        rec = synthesize_subject(cfg, sid)
        name = subject_filename(sid)
        write_subject(rec, out_dir / name)
        names.append(name)
    _write_manifest(out_dir, "synth", {
        "subjects": cfg.n_subjects, "duration_s": cfg.duration_s,
        "fs_ppg": cfg.fs_ppg, "fs_lab": cfg.fs_lab,
        "schedule": [list(s) for s in cfg.activity_schedule],
    }, [cfg.seed], names)
    print(f"wrote {len(names)} subjects to {out_dir}")
    return 0


def cmd_convert_verify(args) -> int:
    directory = Path(args.dir)
    manifest_path = Path(args.manifest) if args.manifest else directory / "manifest.json"
    if not manifest_path.exists():
        print(f"error: manifest not found: {manifest_path}", file=sys.stderr)
        return USAGE_ERROR
    manifest = json.loads(manifest_path.read_text())
    failures = []
    for entry in manifest.get("subjects", []):
        sid = entry["subject_id"]
        path = directory / entry["output_file"]
        if not path.exists():
            failures.append(f"S{sid}: missing file {path.name}")
            continue
        digest = _sha256(path)
        if digest != entry["sha256"]:
            failures.append(f"S{sid}: sha256 mismatch")
            continue
        rec = read_subject(path)
        if rec.ppg.size != entry["n_ppg"] or rec.labels.size != entry["n_lab"]:
            failures.append(
                f"S{sid}: counts {rec.ppg.size}/{rec.labels.size} != "
                f"declared {entry['n_ppg']}/{entry['n_lab']}"
            )
            continue
        if rec.fs_ppg != entry["fs_ppg"] or rec.fs_lab != entry["fs_lab"]:
            failures.append(f"S{sid}: sampling rates differ from manifest")
            continue
        values, counts = np.unique(rec.labels, return_counts=True)
        hist = {str(int(v)): int(c) for v, c in zip(values, counts)}
        if hist != {str(k): int(v) for k, v in entry["label_histogram"].items()}:
            failures.append(f"S{sid}: label histogram mismatch")
    if failures:
        for f in failures:
            print(f"verify FAILED: {f}", file=sys.stderr)
        return RUNTIME_ERROR
    print(f"verified {len(manifest.get('subjects', []))} subjects against {manifest_path.name}")
    return 0


def cmd_pretrain(args) -> int:
    data_dir = Path(args.data)
    if not data_dir.exists():
        print(f"error: dataset directory not found: {data_dir}", file=sys.stderr)
        return USAGE_ERROR
    dataset = load_dataset(data_dir, exclude_subjects=_parse_int_list(args.exclude))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = TrainConfig(
        learning_rate=args.lr, decay=args.decay, clipnorm=args.clipnorm,
        batch_size=args.batch_size, epochs=args.epochs, loss="mse",
    )
    try:
        report = run_pretext(
            dataset, latent_dim=args.d, repetitions=args.reps, cfg=cfg,
            checkpoint_dir=out_dir, base_seed=args.seed,
            workers=_resolve_workers(args),
        )
    except NonFiniteLossError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    detail = f"pretext_d{args.d}_detail.csv"
    summary = f"pretext_d{args.d}_summary.csv"
    write_detail_csv(report, out_dir / detail)
    write_summary_csv(report, out_dir / summary)
    artifacts = [detail, summary] + [p.name for p in sorted(out_dir.glob("*.ppgm"))]
    _write_manifest(out_dir, "pretrain", report.config, [args.seed], artifacts)
    s = report.summaries[0][1]
    print(f"pretext d={args.d}: relative MSE {s.mean:.4f} +/- {s.std:.4f} over {s.n} subjects")
    return 0


def cmd_downstream(args) -> int:
    data_dir = Path(args.data)
    ckpt_dir = Path(args.checkpoints)
    if not data_dir.exists():
        print(f"error: dataset directory not found: {data_dir}", file=sys.stderr)
        return USAGE_ERROR
    if not ckpt_dir.exists():
        print(f"error: checkpoint directory not found: {ckpt_dir}", file=sys.stderr)
        return USAGE_ERROR
    dataset = load_dataset(data_dir, exclude_subjects=_parse_int_list(args.exclude))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for method in args.method.split(","):
        for n in _parse_int_list(args.n):
            try:
                report = run_downstream(
                    dataset, method=method, n_per_class=n, latent_dim=args.d,
                    repetitions=args.reps, checkpoint_dir=ckpt_dir, base_seed=args.seed,
                )
            except MissingCheckpointError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return USAGE_ERROR
            detail = f"downstream_{method}_n{n}_d{args.d}_detail.csv"
            summary = f"downstream_{method}_n{n}_d{args.d}_summary.csv"
            write_detail_csv(report, out_dir / detail)
            write_summary_csv(report, out_dir / summary)
            artifacts += [detail, summary]
            s = report.summaries[0][1]
            print(f"{method} n={n} d={args.d}: AUC {s.mean:.4f} +/- {s.std:.4f}")
    _write_manifest(out_dir, "downstream", {
        "method": args.method, "n": args.n, "d": args.d, "reps": args.reps,
    }, [args.seed], artifacts)
    return 0


def cmd_baseline(args) -> int:
    data_dir = Path(args.data)
    if not data_dir.exists():
        print(f"error: dataset directory not found: {data_dir}", file=sys.stderr)
        return USAGE_ERROR
    dataset = load_dataset(data_dir, exclude_subjects=_parse_int_list(args.exclude))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = TrainConfig(
        learning_rate=args.lr, decay=0.0, clipnorm=args.clipnorm,
        batch_size=args.batch_size, epochs=args.epochs, loss="softmax_ce",
    )
    artifacts = []
    for n in _parse_int_list(args.n):
        try:
            report = run_downstream(
                dataset, method=args.model, n_per_class=n,
                repetitions=args.reps, cfg=cfg, base_seed=args.seed,
            )
        except NonFiniteLossError as exc:
            print(f"error: training diverged: {exc}", file=sys.stderr)
            return RUNTIME_ERROR
        detail = f"downstream_{args.model}_n{n}_detail.csv"
        summary = f"downstream_{args.model}_n{n}_summary.csv"
        write_detail_csv(report, out_dir / detail)
        write_summary_csv(report, out_dir / summary)
        artifacts += [detail, summary]
        s = report.summaries[0][1]
        print(f"{args.model} n={n}: AUC {s.mean:.4f} +/- {s.std:.4f}")
    _write_manifest(out_dir, "baseline", {
        "model": args.model, "n": args.n, "epochs": args.epochs,
        "lr": args.lr, "clipnorm": args.clipnorm,
    }, [args.seed], artifacts)
    return 0


def cmd_bi(args) -> int:
    data_dir = Path(args.data)
    if not data_dir.exists():
        print(f"error: dataset directory not found: {data_dir}", file=sys.stderr)
        return USAGE_ERROR
    dataset = load_dataset(data_dir, exclude_subjects=_parse_int_list(args.exclude))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder = None
    if args.checkpoint:
        ckpt = Path(args.checkpoint)
        if not ckpt.exists():
            print(f"error: expected checkpoint {ckpt}", file=sys.stderr)
            return USAGE_ERROR
        encoder = load_model(ckpt)
    cfg = TrainConfig(epochs=args.epochs, loss="mse")
    artifacts = []
    for activity in args.activity.split(","):
        report = run_bi(
            dataset, activity=activity.strip(), representation=args.repr,
            latent_dim=args.d, seed=args.seed, encoder=encoder, cfg=cfg,
        )
        detail = f"bi_{activity.strip()}_{args.repr}_detail.csv"
        summary = f"bi_{activity.strip()}_{args.repr}_summary.csv"
        write_detail_csv(report, out_dir / detail)
        write_summary_csv(report, out_dir / summary)
        artifacts += [detail, summary]
        s = report.summaries[0][1]
        print(f"bi {activity.strip()} ({args.repr}): AUC {s.mean:.4f} +/- {s.std:.4f}")
    _write_manifest(out_dir, "bi", {
        "activity": args.activity, "repr": args.repr, "d": args.d,
        "epochs": args.epochs,
    }, [args.seed], artifacts)
    return 0


def cmd_report(args) -> int:
    in_dir = Path(getattr(args, "in"))
    if not in_dir.exists() or not any(in_dir.glob("*_detail.csv")):
        print(f"error: no detail CSVs in {in_dir}", file=sys.stderr)
        return USAGE_ERROR
    out_dir = Path(args.out)
    try:
        written = merge_reports(in_dir, out_dir)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    _write_manifest(out_dir, "report", {"in": str(in_dir)}, [], written)
    print(f"wrote {', '.join(written)} to {out_dir}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ppgssl",
        description="Self-supervised PPG representation learning pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=3)
    p.add_argument("--duration", type=float, default=300.0)
    p.add_argument("--fs-ppg", type=float, default=64.0)
    p.add_argument("--fs-lab", type=float, default=4.0)
    p.add_argument("--schedule", type=str, default="",
                   help="comma-separated code:seconds pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert-verify", help="check converted files against a manifest")
    p.add_argument("--dir", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_convert_verify)

    p = sub.add_parser("pretrain", help="train per-fold autoencoders")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--decay", type=float, default=0.001)
    p.add_argument("--clipnorm", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exclude", type=str, default="")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("downstream", help="few-shot recognition on frozen encoders")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default="ssl_knn",
                   help="comma-separated: ssl_knn, ssl_lr")
    p.add_argument("--n", type=str, default="2,5,10,50,1000")
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exclude", type=str, default="")
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(func=cmd_downstream)

    p = sub.add_parser("baseline", help="supervised baselines on raw windows")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=["simple", "cnn_lstm"], default="simple")
    p.add_argument("--n", type=str, default="2,5,10,50,1000")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--clipnorm", type=float, default=0.6)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exclude", type=str, default="")
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("bi", help="subject identification per activity")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--activity", default="sitting",
                   help="comma-separated activity names")
    p.add_argument("--repr", choices=["original", "ssl"], default="ssl")
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default=None,
                   help="reuse an existing autoencoder checkpoint")
    p.add_argument("--exclude", type=str, default="")
    p.add_argument("--config", type=str, default=None)
    p.set_defaults(func=cmd_bi)

    p = sub.add_parser("report", help="merge detail CSVs into table-shaped outputs")
    p.add_argument("--in", dest="in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    subparsers.update(sub.choices)
    return parser, subparsers


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        if "--config" in argv and argv and argv[0] in subparsers:
            _apply_config_file(subparsers[argv[0]], argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except (InvalidRecordError, InterchangeFormatError, InsufficientDataError,
            ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except NonFiniteLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
