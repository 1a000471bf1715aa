"""Binary interchange format for subject records.

Layout (little-endian), one file per subject, named ``S<id>.ppgd``:

    magic   4 bytes  b"PPGD"
    version u32      1
    subject u32
    fs_ppg  f64
    fs_lab  f64
    n_ppg   u64
    n_lab   u64
    data    n_ppg x f32 PPG samples, then n_lab x u8 activity codes

Writing the same record twice produces byte-identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ppgssl.data.records import DALIA_CODES, Dataset, SubjectRecord, make_record
from ppgssl.errors import (
    InterchangeFormatError,
    InvalidRecordError,
    TruncatedFileError,
    UnsupportedVersionError,
)

MAGIC = b"PPGD"
VERSION = 1
_HEADER = struct.Struct("<4sIIddQQ")


def subject_filename(subject_id: int) -> str:
    return f"S{subject_id}.ppgd"


def write_subject(record: SubjectRecord, path) -> None:
    """Serialize a record to the interchange format (byte-deterministic)."""
    record.validate()
    ppg = np.ascontiguousarray(record.ppg, dtype="<f4")
    labels = np.ascontiguousarray(record.labels, dtype=np.uint8)
    header = _HEADER.pack(
        MAGIC, VERSION, record.subject_id,
        record.fs_ppg, record.fs_lab,
        ppg.size, labels.size,
    )
    Path(path).write_bytes(header + ppg.tobytes() + labels.tobytes())


def read_subject(path) -> SubjectRecord:
    """Deserialize a record; validates magic, version, and declared lengths."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(
            f"{path}: expected at least {_HEADER.size} header bytes, got {len(raw)}"
        )
    magic, version, subject_id, fs_ppg, fs_lab, n_ppg, n_lab = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InterchangeFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * n_ppg + n_lab
    if len(raw) != expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} bytes for declared lengths, got {len(raw)}"
        )
    ppg = np.frombuffer(raw, dtype="<f4", count=n_ppg, offset=_HEADER.size).copy()
    labels = np.frombuffer(raw, dtype=np.uint8, count=n_lab, offset=_HEADER.size + 4 * n_ppg).copy()
    return make_record(subject_id, ppg, labels, fs_ppg, fs_lab)


def load_dataset(directory, exclude_subjects=()) -> Dataset:
    """Load every ``*.ppgd`` file in a directory, skipping excluded subject ids.

    Records are ordered by subject id. Raises on an empty directory or on a
    subject id appearing in more than one file.
    """
    directory = Path(directory)
    files = sorted(directory.glob("*.ppgd"))
    if not files:
        raise InvalidRecordError(f"no .ppgd files in {directory}")
    excluded = set(int(s) for s in exclude_subjects)
    records: dict[int, SubjectRecord] = {}
    for f in files:
        rec = read_subject(f)
        if rec.subject_id in excluded:
            continue
        if rec.subject_id in records:
            raise InvalidRecordError(f"duplicate subject_id {rec.subject_id} in {f}")
        records[rec.subject_id] = rec
    ordered = tuple(records[sid] for sid in sorted(records))
    if not ordered:
        raise InvalidRecordError(f"all subjects in {directory} were excluded")
    return Dataset(records=ordered, code_table=DALIA_CODES)
