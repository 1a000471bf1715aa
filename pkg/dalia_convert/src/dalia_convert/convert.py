"""Convert PPG-Dalia per-subject pickle archives to the interchange format.

Each source archive `S<id>/S<id>.pkl` holds a dict with the wrist BVP channel
under signal/wrist/BVP (64 Hz) and a per-sample activity-code stream under
'activity' (4 Hz). Only those two streams are converted; chest channels and
everything else are dropped.

The output layout is the documented interchange file (little-endian): magic
"PPGD", u32 version=1, u32 subject_id, f64 fs_ppg, f64 fs_lab, u64 n_ppg,
u64 n_lab, n_ppg float32 samples, n_lab u8 codes - written here by an
independent implementation so converter and consumer only meet at the byte
boundary. A manifest.json records per-subject counts, rates, label histograms
and output checksums for later verification.
"""

from __future__ import annotations

import hashlib
import json
import pickle
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"PPGD"
VERSION = 1
_HEADER = struct.Struct("<4sIIddQQ")

BVP_RATE_HZ = 64.0
ACTIVITY_RATE_HZ = 4.0
VALID_CODES = set(range(9))
_SUBJECT_FILE = re.compile(r"^S(\d+)\.pkl$")


class ConversionError(ValueError):
    pass


class MissingFieldError(ConversionError):
    pass


class RateInferenceError(ConversionError):
    pass


@dataclass
class SubjectEntry:
    subject_id: int
    source_file: str
    output_file: str
    n_ppg: int
    n_lab: int
    fs_ppg: float
    fs_lab: float
    label_histogram: dict[str, int]
    sha256: str


@dataclass
class ConversionManifest:
    version: int = 1
    subjects: list[SubjectEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "subjects": [vars(entry) for entry in self.subjects],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ConversionManifest":
        manifest = cls(version=payload.get("version", 1))
        for raw in payload.get("subjects", []):
            manifest.subjects.append(SubjectEntry(**raw))
        return manifest


def find_source_files(src_dir) -> list[tuple[int, Path]]:
    """All S<id>.pkl files under src_dir, ordered by subject id."""
    found = []
    for path in Path(src_dir).rglob("S*.pkl"):
        match = _SUBJECT_FILE.match(path.name)
        if match:
            found.append((int(match.group(1)), path))
    found.sort(key=lambda pair: pair[0])
    return found


def load_subject_pickle(path) -> tuple[np.ndarray, np.ndarray]:
    """Extract (wrist BVP float32, activity codes u8) from one archive."""
    with open(path, "rb") as fh:
        data = pickle.load(fh, encoding="latin1")
    try:
        bvp = np.asarray(data["signal"]["wrist"]["BVP"], dtype=np.float32).ravel()
    except (KeyError, TypeError) as exc:
        raise MissingFieldError(f"{path}: no signal/wrist/BVP field") from exc
    if "activity" not in data:
        raise MissingFieldError(f"{path}: no activity field")
    activity = np.asarray(data["activity"]).ravel()
    rounded = np.rint(activity)
    if not np.allclose(activity, rounded, atol=1e-6):
        raise ConversionError(f"{path}: activity stream has non-integral codes")
    codes = rounded.astype(np.int64)
    bad = set(np.unique(codes).tolist()) - VALID_CODES
    if bad:
        raise ConversionError(f"{path}: unknown activity codes {sorted(bad)}")
    return bvp, codes.astype(np.uint8)


def write_interchange(path, subject_id, ppg, labels, fs_ppg, fs_lab) -> None:
    ppg = np.ascontiguousarray(ppg, dtype="<f4")
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    header = _HEADER.pack(MAGIC, VERSION, subject_id, fs_ppg, fs_lab,
                          ppg.size, labels.size)
    Path(path).write_bytes(header + ppg.tobytes() + labels.tobytes())


def read_interchange(path):
    """Independent reader used by verify(); mirrors the documented layout."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConversionError(f"{path}: shorter than the header")
    magic, version, subject_id, fs_ppg, fs_lab, n_ppg, n_lab = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ConversionError(f"{path}: bad magic/version")
    expected = _HEADER.size + 4 * n_ppg + n_lab
    if len(raw) != expected:
        raise ConversionError(f"{path}: size {len(raw)} != declared {expected}")
    ppg = np.frombuffer(raw, dtype="<f4", count=n_ppg, offset=_HEADER.size)
    labels = np.frombuffer(raw, dtype=np.uint8, count=n_lab,
                           offset=_HEADER.size + 4 * n_ppg)
    return subject_id, ppg, labels, fs_ppg, fs_lab


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def convert(src_dir, dst_dir, fs_ppg=BVP_RATE_HZ, fs_lab=ACTIVITY_RATE_HZ,
            rate_tolerance=0.01) -> ConversionManifest:
    """Convert every source subject; returns (and writes) the manifest.

    The two streams must describe the same recording span: their durations at
    the declared rates may differ by at most ``rate_tolerance`` (relative),
    otherwise the declared rates cannot both be right.
    """
    sources = find_source_files(src_dir)
    if not sources:
        raise ConversionError(f"no S<id>.pkl files under {src_dir}")
    dst_dir = Path(dst_dir)
    dst_dir.mkdir(parents=True, exist_ok=True)
    manifest = ConversionManifest()
    for subject_id, path in sources:
        bvp, codes = load_subject_pickle(path)
        if bvp.size == 0 or codes.size == 0:
            raise ConversionError(f"{path}: empty stream")
        span_ppg = bvp.size / fs_ppg
        span_lab = codes.size / fs_lab
        if abs(span_ppg - span_lab) > rate_tolerance * max(span_ppg, span_lab):
            raise RateInferenceError(
                f"{path}: BVP spans {span_ppg:.1f}s at {fs_ppg}Hz but activity "
                f"spans {span_lab:.1f}s at {fs_lab}Hz"
            )
        out_name = f"S{subject_id}.ppgd"
        out_path = dst_dir / out_name
        write_interchange(out_path, subject_id, bvp, codes, fs_ppg, fs_lab)
        values, counts = np.unique(codes, return_counts=True)
        manifest.subjects.append(SubjectEntry(
            subject_id=subject_id,
            source_file=str(path),
            output_file=out_name,
            n_ppg=int(bvp.size),
            n_lab=int(codes.size),
            fs_ppg=float(fs_ppg),
            fs_lab=float(fs_lab),
            label_histogram={str(int(v)): int(c) for v, c in zip(values, counts)},
            sha256=_sha256(out_path),
        ))
    (dst_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest


def verify(dst_dir, manifest: ConversionManifest) -> tuple[bool, list[str]]:
    """Re-read every converted file and compare it against the manifest."""
    dst_dir = Path(dst_dir)
    failures: list[str] = []
    for entry in manifest.subjects:
        path = dst_dir / entry.output_file
        if not path.exists():
            failures.append(f"S{entry.subject_id}: missing {entry.output_file}")
            continue
        if _sha256(path) != entry.sha256:
            failures.append(f"S{entry.subject_id}: checksum mismatch")
            continue
        try:
            subject_id, ppg, labels, fs_ppg, fs_lab = read_interchange(path)
        except ConversionError as exc:
            failures.append(f"S{entry.subject_id}: unreadable ({exc})")
            continue
        if subject_id != entry.subject_id:
            failures.append(f"S{entry.subject_id}: header says subject {subject_id}")
            continue
        if ppg.size != entry.n_ppg or labels.size != entry.n_lab:
            failures.append(
                f"S{entry.subject_id}: counts {ppg.size}/{labels.size} != "
                f"{entry.n_ppg}/{entry.n_lab}"
            )
            continue
        if fs_ppg != entry.fs_ppg or fs_lab != entry.fs_lab:
            failures.append(f"S{entry.subject_id}: rates differ from manifest")
            continue
        values, counts = np.unique(labels, return_counts=True)
        hist = {str(int(v)): int(c) for v, c in zip(values, counts)}
        if hist != entry.label_histogram:
            failures.append(f"S{entry.subject_id}: label histogram mismatch")
    return (not failures), failures


def load_manifest(path) -> ConversionManifest:
    return ConversionManifest.from_dict(json.loads(Path(path).read_text()))
