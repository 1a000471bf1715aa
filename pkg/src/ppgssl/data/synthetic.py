"""Synthetic PPG corpus generator.

Exists so the full pipeline (preprocessing, pretraining, protocols) runs and is
testable without the real wrist-PPG corpus. Each subject gets a quasi-periodic
pulse waveform (fundamental at a subject-specific heart-rate frequency plus two
harmonics with subject-specific amplitude ratios), activity-dependent
band-limited motion noise, and slow baseline wander. Generation is a pure
function of (config, seed, subject_id).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ppgssl.data.records import DALIA_CODES, Dataset, SubjectRecord, make_record

DEFAULT_NOISE_LEVELS: dict[int, float] = {
    0: 0.30,  # transient
    1: 0.05,  # sitting: near motion-free
    2: 0.90,  # stairs
    3: 0.45,  # table soccer
    4: 0.65,  # cycling
    5: 0.35,
    6: 0.25,
    7: 0.20,  # walking
    8: 0.10,
}

DEFAULT_SCHEDULE: tuple[tuple[int, float], ...] = (
    (1, 60.0), (2, 60.0), (3, 60.0), (4, 60.0), (7, 60.0),
)


@dataclass(frozen=True)
class SyntheticConfig:
    n_subjects: int = 3
    duration_s: float = 300.0
    fs_ppg: float = 64.0
    fs_lab: float = 4.0
    heart_rate_range_hz: tuple[float, float] = (0.9, 2.5)
    harmonic2_range: tuple[float, float] = (0.2, 0.6)
    harmonic3_range: tuple[float, float] = (0.05, 0.3)
    noise_levels: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_NOISE_LEVELS))
    wander_amp: float = 0.3
    wander_hz: float = 0.05
    activity_schedule: tuple[tuple[int, float], ...] = DEFAULT_SCHEDULE
    seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.fs_ppg <= 0 or self.fs_lab <= 0:
            raise ValueError("sampling rates must be positive")
        lo, hi = self.heart_rate_range_hz
        if not (0.5 < lo <= hi < 3.0):
            raise ValueError(f"heart-rate range must lie within (0.5, 3.0) Hz, got {lo}-{hi}")
        if self.n_subjects < 1:
            raise ValueError("n_subjects must be >= 1")
        for code, dur in self.activity_schedule:
            if dur <= 0:
                raise ValueError(f"schedule duration for code {code} must be positive")
            if code not in DALIA_CODES.names:
                raise ValueError(f"schedule uses unknown activity code {code}")
        total = sum(d for _, d in self.activity_schedule)
        if total > self.duration_s + 1e-9:
            raise ValueError(
                f"activity schedule spans {total:.3f} s, exceeding duration_s={self.duration_s}"
            )


def _codes_at(times: np.ndarray, schedule, default_code: int = 0) -> np.ndarray:
    """Activity code for each time point; gaps after the schedule are transient."""
    bounds = np.cumsum([dur for _, dur in schedule])
    codes = np.full(times.shape, default_code, dtype=np.int64)
    start = 0.0
    for (code, _), end in zip(schedule, bounds):
        codes[(times >= start) & (times < end)] = code
        start = end
    return codes


def synthesize_subject(cfg: SyntheticConfig, subject_id: int) -> SubjectRecord:
    """Generate one subject's record, deterministic in (cfg.seed, subject_id)."""
    rng = np.random.default_rng([cfg.seed, int(subject_id)])
    n_ppg = math.floor(cfg.duration_s * cfg.fs_ppg)
    n_lab = math.floor(cfg.duration_s * cfg.fs_lab)
    t = np.arange(n_ppg) / cfg.fs_ppg

    heart_rate = rng.uniform(*cfg.heart_rate_range_hz)
    amp2 = rng.uniform(*cfg.harmonic2_range)
    amp3 = rng.uniform(*cfg.harmonic3_range)
    ph1, ph2, ph3, phw = rng.uniform(0.0, 2.0 * np.pi, size=4)

    wave = (
        np.sin(2 * np.pi * heart_rate * t + ph1)
        + amp2 * np.sin(4 * np.pi * heart_rate * t + ph2)
        + amp3 * np.sin(6 * np.pi * heart_rate * t + ph3)
    )

    ppg_codes = _codes_at(t, cfg.activity_schedule)
    sigma = np.array([cfg.noise_levels.get(int(c), 0.3) for c in ppg_codes])
    white = rng.standard_normal(n_ppg) * sigma
    # crude band limit: short Hann smoothing keeps the noise below ~fs/8
    kernel = np.hanning(9)
    kernel /= kernel.sum()
    noise = np.convolve(white, kernel, mode="same")

    wander = cfg.wander_amp * np.sin(2 * np.pi * cfg.wander_hz * t + phw)

    lab_times = np.arange(n_lab) / cfg.fs_lab
    labels = _codes_at(lab_times, cfg.activity_schedule)

    return make_record(subject_id, wave + noise + wander, labels, cfg.fs_ppg, cfg.fs_lab)


def synthesize_dataset(cfg: SyntheticConfig, subject_ids=None) -> Dataset:
    """Generate records for subject ids 1..n_subjects (or an explicit id list)."""
    if subject_ids is None:
        subject_ids = range(1, cfg.n_subjects + 1)
    records = tuple(synthesize_subject(cfg, sid) for sid in subject_ids)
    return Dataset(records=records, code_table=DALIA_CODES)
