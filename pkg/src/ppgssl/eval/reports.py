"""CSV emission and merging for experiment reports.

Detail files carry one row per (configuration, unit); summary files one row
per configuration with mean/std/n. Both start with a single '#' comment line
echoing the resolved run configuration as compact JSON. Formatting is fixed
(UTF-8, '.' decimal separator, shortest round-trip floats) so identical runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ppgssl.eval.experiments import ExperimentReport
from ppgssl.eval.metrics import summarize

DETAIL_COLUMNS = ["experiment", "d", "method", "n_per_class", "activity", "unit_id", "value"]
SUMMARY_COLUMNS = ["experiment", "d", "method", "n_per_class", "activity", "mean", "std", "n"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _config_comment(config: dict) -> str:
    return "# config " + json.dumps(config, sort_keys=True, separators=(",", ":"))


def write_detail_csv(report: ExperimentReport, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(_config_comment(report.config) + "\n")
        writer = csv.writer(fh)
        writer.writerow(DETAIL_COLUMNS)
        for row in report.details:
            writer.writerow([
                row.experiment, _fmt(row.d), _fmt(row.method), _fmt(row.n_per_class),
                _fmt(row.activity), row.unit_id, _fmt(row.value),
            ])


def write_summary_csv(report: ExperimentReport, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(_config_comment(report.config) + "\n")
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for key, summary in report.summaries:
            writer.writerow([
                key.get("experiment"), _fmt(key.get("d")), _fmt(key.get("method")),
                _fmt(key.get("n_per_class")), _fmt(key.get("activity")),
                _fmt(summary.mean), _fmt(summary.std), summary.n,
            ])


def read_detail_csv(path):
    """Return (config dict or None, list of row dicts with typed fields)."""
    path = Path(path)
    config = None
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if first.startswith("# config "):
            config = json.loads(first[len("# config "):])
        else:
            fh.seek(0)
        reader = csv.DictReader(fh)
        if reader.fieldnames != DETAIL_COLUMNS:
            raise ValueError(
                f"{path}: unexpected detail columns {reader.fieldnames}"
            )
        for raw in reader:
            rows.append({
                "experiment": raw["experiment"],
                "d": int(raw["d"]) if raw["d"] else None,
                "method": raw["method"] or None,
                "n_per_class": int(raw["n_per_class"]) if raw["n_per_class"] else None,
                "activity": raw["activity"] or None,
                "unit_id": raw["unit_id"],
                "value": float(raw["value"]),
            })
    return config, rows


def _write_table(path, header, rows) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def merge_reports(detail_dir, out_dir) -> list[str]:
    """Merge all detail CSVs in a directory into table-shaped outputs.

    Emits (when matching rows exist): reconstruction error vs latent width,
    recognition AUC vs training-set size per method (mean and per-subject),
    the size x width AUC grid, and the per-activity subject-identification
    comparison. Returns the written file names.
    """
    detail_dir = Path(detail_dir)
    out_dir = Path(out_dir)
    files = sorted(detail_dir.glob("*_detail.csv"))
    if not files:
        raise FileNotFoundError(f"no *_detail.csv files in {detail_dir}")
    all_rows = []
    for f in files:
        _, rows = read_detail_csv(f)
        all_rows.extend(rows)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def group(rows, keys):
        table: dict[tuple, list[float]] = {}
        for r in rows:
            table.setdefault(tuple(r[k] for k in keys), []).append(r["value"])
        return table

    pretext = [r for r in all_rows if r["experiment"] == "pretext"]
    if pretext:
        table = group(pretext, ["d"])
        rows = []
        for (d,), values in sorted(table.items(), key=lambda kv: kv[0][0]):
            s = summarize(values)
            rows.append([d, s.mean, s.std, s.n])
        _write_table(out_dir / "reconstruction_vs_width.csv",
                     ["d", "mean_relative_mse", "std", "n_subjects"], rows)
        written.append("reconstruction_vs_width.csv")

    downstream = [r for r in all_rows if r["experiment"] == "downstream"]
    if downstream:
        table = group(downstream, ["method", "n_per_class", "d"])
        rows = []
        for (method, n, d), values in sorted(
            table.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0)
        ):
            s = summarize(values)
            rows.append([method, n, d, s.mean, s.std, s.n])
        _write_table(out_dir / "auc_vs_samples.csv",
                     ["method", "n_per_class", "d", "mean_auc", "std", "n_subjects"], rows)
        written.append("auc_vs_samples.csv")
        per_subject = sorted(
            downstream,
            key=lambda r: (r["method"], r["n_per_class"], r["d"] or 0, r["unit_id"]),
        )
        _write_table(
            out_dir / "auc_per_subject.csv",
            ["method", "n_per_class", "d", "subject", "auc"],
            [[r["method"], r["n_per_class"], r["d"], r["unit_id"], r["value"]]
             for r in per_subject],
        )
        written.append("auc_per_subject.csv")

        ssl_rows = [r for r in downstream if r["method"] == "ssl_knn" and r["d"] is not None]
        if ssl_rows:
            widths = sorted({r["d"] for r in ssl_rows})
            table = group(ssl_rows, ["n_per_class", "d"])
            header = ["n_per_class"]
            for d in widths:
                header += [f"d{d}_mean", f"d{d}_std"]
            grid = []
            for n in sorted({r["n_per_class"] for r in ssl_rows}):
                row = [n]
                for d in widths:
                    values = table.get((n, d))
                    if values:
                        s = summarize(values)
                        row += [s.mean, s.std]
                    else:
                        row += [None, None]
                grid.append(row)
            _write_table(out_dir / "auc_vs_width.csv", header, grid)
            written.append("auc_vs_width.csv")

    bi = [r for r in all_rows if r["experiment"] == "bi"]
    if bi:
        table = group(bi, ["activity", "method"])
        activities = sorted({r["activity"] for r in bi})
        reprs = sorted({r["method"] for r in bi})
        header = ["activity"]
        for rep in reprs:
            header += [f"{rep}_mean", f"{rep}_std"]
        rows = []
        for act in activities:
            row = [act]
            for rep in reprs:
                values = table.get((act, rep))
                if values:
                    s = summarize(values)
                    row += [s.mean, s.std]
                else:
                    row += [None, None]
            rows.append(row)
        _write_table(out_dir / "subject_id_by_activity.csv", header, rows)
        written.append("subject_id_by_activity.csv")

    return written
