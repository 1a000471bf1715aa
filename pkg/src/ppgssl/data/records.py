"""Domain records: one subject's PPG + activity-label streams, and the dataset bundle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ppgssl.errors import InvalidRecordError


@dataclass(frozen=True)
class ActivityCodeTable:
    """Numeric activity codes, their names, and the studied five-activity subset."""

    names: Mapping[int, str]
    studied: frozenset[int]

    def __post_init__(self):
        if len(self.studied) != 5:
            raise ValueError(f"expected exactly 5 studied codes, got {len(self.studied)}")
        unknown = set(self.studied) - set(self.names)
        if unknown:
            raise ValueError(f"studied codes not in table: {sorted(unknown)}")

    def is_studied(self, code: int) -> bool:
        return code in self.studied

    def code_of(self, name: str) -> int:
        for code, n in self.names.items():
            if n == name:
                return code
        raise KeyError(f"unknown activity name: {name!r}")


# Numeric annotation scheme of the wrist-PPG daily-activity corpus this
# artifact targets. Codes 5 (driving), 6 (lunch) and 8 (working) are
# concurrent/interleaved activities and are excluded from the studied subset.
DALIA_CODES = ActivityCodeTable(
    names={
        0: "transient",
        1: "sitting",
        2: "stairs",
        3: "table_soccer",
        4: "cycling",
        5: "driving",
        6: "lunch",
        7: "walking",
        8: "working",
    },
    studied=frozenset({1, 2, 3, 4, 7}),
)

STUDIED_CLASSES: tuple[int, ...] = tuple(sorted(DALIA_CODES.studied))


@dataclass(frozen=True)
class SubjectRecord:
    """Raw per-subject streams: PPG samples at fs_ppg Hz, activity codes at fs_lab Hz."""

    subject_id: int
    ppg: np.ndarray  # float32, shape (n_ppg,)
    labels: np.ndarray  # uint8, shape (n_lab,)
    fs_ppg: float
    fs_lab: float

    def validate(self, code_table: ActivityCodeTable = DALIA_CODES) -> None:
        if not (np.isfinite(self.fs_ppg) and self.fs_ppg > 0):
            raise InvalidRecordError(f"fs_ppg must be finite and > 0, got {self.fs_ppg}")
        if not (np.isfinite(self.fs_lab) and self.fs_lab > 0):
            raise InvalidRecordError(f"fs_lab must be finite and > 0, got {self.fs_lab}")
        if self.ppg.size == 0:
            raise InvalidRecordError("ppg stream is empty")
        if self.labels.size:
            bad = set(np.unique(self.labels).tolist()) - set(code_table.names)
            if bad:
                raise InvalidRecordError(f"unknown activity codes: {sorted(bad)}")

    @property
    def duration_s(self) -> float:
        return self.ppg.size / self.fs_ppg


def make_record(subject_id, ppg, labels, fs_ppg, fs_lab) -> SubjectRecord:
    """Build a SubjectRecord with canonical dtypes (float32 ppg, uint8 labels)."""
    rec = SubjectRecord(
        subject_id=int(subject_id),
        ppg=np.ascontiguousarray(ppg, dtype=np.float32),
        labels=np.ascontiguousarray(labels, dtype=np.uint8),
        fs_ppg=float(fs_ppg),
        fs_lab=float(fs_lab),
    )
    return rec


@dataclass(frozen=True)
class Dataset:
    """All loaded subject records plus the activity code table."""

    records: tuple[SubjectRecord, ...]
    code_table: ActivityCodeTable = field(default=DALIA_CODES)

    def __post_init__(self):
        ids = [r.subject_id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidRecordError(f"duplicate subject ids: {dup}")

    @property
    def subject_ids(self) -> tuple[int, ...]:
        return tuple(r.subject_id for r in self.records)

    def record(self, subject_id: int) -> SubjectRecord:
        for r in self.records:
            if r.subject_id == subject_id:
                return r
        raise KeyError(f"no record for subject {subject_id}")
