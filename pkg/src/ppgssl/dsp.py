"""Signal preprocessing: band-pass filtering, per-subject z-normalization,
fixed-size windowing with overlap, and window labeling.

The pipeline order is fixed: filter the whole recording, normalize it to zero
mean / unit variance (population statistics), then cut overlapping windows.
Pretext windows are unlabeled (1 s step for training, 2 s step for testing);
downstream windows use the 2 s step and keep only windows whose label samples
are constant and belong to the studied activity subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal as _signal

from ppgssl.data.records import ActivityCodeTable, DALIA_CODES, SubjectRecord
from ppgssl.errors import InsufficientDataError, ZeroVarianceError

WINDOW_S = 8.0
TEST_OVERLAP_S = 6.0
TRAIN_OVERLAP_S = 7.0
WINDOW_LEN = 512  # samples per window at the canonical 64 Hz rate


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass Butterworth design parameters."""

    fs: float
    low_hz: float = 0.1
    high_hz: float = 6.0
    order: int = 2

    def __post_init__(self):
        if not (0.0 < self.low_hz < self.high_hz < self.fs / 2.0):
            raise ValueError(
                f"band edges must satisfy 0 < low < high < fs/2, got "
                f"({self.low_hz}, {self.high_hz}) at fs={self.fs}"
            )
        if self.order < 1:
            raise ValueError("order must be >= 1")


@dataclass(frozen=True)
class BiquadCascade:
    """Second-order sections (b0, b1, b2, a1, a2), a0 normalized to 1."""

    sections: tuple[tuple[float, float, float, float, float], ...]

    def pole_magnitudes(self) -> np.ndarray:
        mags = []
        for _, _, _, a1, a2 in self.sections:
            mags.extend(abs(r) for r in np.roots([1.0, a1, a2]))
        return np.array(mags)

    def is_stable(self) -> bool:
        return bool(np.all(self.pole_magnitudes() < 1.0))

    def response_at(self, freq_hz: float, fs: float) -> complex:
        """Transfer function on the unit circle, by direct polynomial evaluation."""
        z_inv = np.exp(-2j * np.pi * freq_hz / fs)
        h = 1.0 + 0.0j
        for b0, b1, b2, a1, a2 in self.sections:
            num = b0 + b1 * z_inv + b2 * z_inv**2
            den = 1.0 + a1 * z_inv + a2 * z_inv**2
            h *= num / den
        return h


def design_bandpass(spec: FilterSpec) -> BiquadCascade:
    """Butterworth band-pass via analog prototype + pre-warped bilinear transform."""
    sos = _signal.butter(
        spec.order, [spec.low_hz, spec.high_hz], btype="bandpass", fs=spec.fs, output="sos"
    )
    sections = tuple(
        (float(b0), float(b1), float(b2), float(a1), float(a2))
        for b0, b1, b2, _, a1, a2 in sos
    )
    cascade = BiquadCascade(sections)
    if not cascade.is_stable():
        raise ValueError("designed cascade is unstable")
    return cascade


def apply_filter(x: np.ndarray, cascade: BiquadCascade) -> np.ndarray:
    """Causal single-pass filtering through each section (zero initial state)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 1:
        raise ValueError("signal must contain at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    sos = np.array([(b0, b1, b2, 1.0, a1, a2) for b0, b1, b2, a1, a2 in cascade.sections])
    return _signal.sosfilt(sos, x)


def normalize_per_subject(x: np.ndarray) -> np.ndarray:
    """Zero mean, unit population variance over the whole signal."""
    x = np.asarray(x, dtype=np.float64)
    var = x.var()
    if var <= 1e-24:
        raise ZeroVarianceError("constant signal cannot be normalized")
    return (x - x.mean()) / np.sqrt(var)


@dataclass(frozen=True)
class Window:
    """One fixed-length signal segment, tagged with its origin."""

    samples: np.ndarray  # float32, shape (T,)
    subject_id: int
    start_index: int  # in PPG samples
    label: Optional[int] = None


@dataclass(frozen=True)
class WindowSet:
    windows: tuple[Window, ...]

    def __post_init__(self):
        lengths = {w.samples.size for w in self.windows}
        if len(lengths) > 1:
            raise ValueError(f"windows have mixed lengths: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    @property
    def count(self) -> int:
        return len(self.windows)

    def matrix(self) -> np.ndarray:
        """Stack to (count, T) float32."""
        return np.stack([w.samples for w in self.windows]).astype(np.float32)

    def labels(self) -> np.ndarray:
        if any(w.label is None for w in self.windows):
            raise ValueError("window set contains unlabeled windows")
        return np.array([w.label for w in self.windows], dtype=np.int64)

    def subject_ids(self) -> np.ndarray:
        return np.array([w.subject_id for w in self.windows], dtype=np.int64)


def segment(
    x: np.ndarray,
    fs: float,
    win_s: float = WINDOW_S,
    overlap_s: float = TEST_OVERLAP_S,
    subject_id: int = -1,
) -> WindowSet:
    """Cut overlapping windows at starts 0, step, 2*step, ... while they fit.

    step = (win_s - overlap_s) * fs samples; the count is
    floor((len(x) - T) / step) + 1.
    """
    if not 0 <= overlap_s < win_s:
        raise ValueError("overlap must satisfy 0 <= overlap < window length")
    x = np.asarray(x)
    n_win = int(round(win_s * fs))
    step = int(round((win_s - overlap_s) * fs))
    if step < 1:
        raise ValueError("window step is below one sample")
    if x.size < n_win:
        raise InsufficientDataError(
            f"signal of {x.size} samples is shorter than one {n_win}-sample window"
        )
    starts = range(0, x.size - n_win + 1, step)
    windows = tuple(
        Window(samples=x[s : s + n_win].astype(np.float32), subject_id=subject_id, start_index=s)
        for s in starts
    )
    return WindowSet(windows)


def label_windows(
    label_signal: np.ndarray,
    fs_lab: float,
    win_s: float = WINDOW_S,
    overlap_s: float = TEST_OVERLAP_S,
    *,
    fs_ppg: float,
    n_windows: int,
) -> list[Optional[int]]:
    """Per-window activity code on the same time grid as the PPG segmentation.

    Window i spans [i*step_s, i*step_s + win_s); its label samples are the
    fs_lab-rate slice covering that span (start = round(start_ppg * fs_lab /
    fs_ppg)). A window whose label samples are all equal gets that code; a
    window containing two different codes is marked removed (None).
    """
    labels = np.asarray(label_signal)
    step_ppg = int(round((win_s - overlap_s) * fs_ppg))
    n_lab = int(round(win_s * fs_lab))
    out: list[Optional[int]] = []
    for i in range(n_windows):
        start_ppg = i * step_ppg
        start_lab = int(round(start_ppg * fs_lab / fs_ppg))
        if start_lab + n_lab > labels.size:
            raise InsufficientDataError(
                f"label stream ends at {labels.size} samples, window {i} needs "
                f"[{start_lab}, {start_lab + n_lab})"
            )
        chunk = labels[start_lab : start_lab + n_lab]
        first = int(chunk[0])
        out.append(first if bool(np.all(chunk == first)) else None)
    return out


def _filter_and_normalize(record: SubjectRecord) -> np.ndarray:
    cascade = design_bandpass(FilterSpec(fs=record.fs_ppg))
    return normalize_per_subject(apply_filter(record.ppg, cascade))


def preprocess_pretext(record: SubjectRecord, role: str) -> WindowSet:
    """Filter, normalize, and segment for the reconstruction task (unlabeled).

    Training uses a 7 s overlap (denser grid to enlarge the set), testing 6 s.
    """
    if role not in ("train", "test"):
        raise ValueError(f"role must be 'train' or 'test', got {role!r}")
    overlap = TRAIN_OVERLAP_S if role == "train" else TEST_OVERLAP_S
    x = _filter_and_normalize(record)
    return segment(x, record.fs_ppg, WINDOW_S, overlap, subject_id=record.subject_id)


def preprocess_downstream(
    record: SubjectRecord, code_table: ActivityCodeTable = DALIA_CODES
) -> WindowSet:
    """Filter, normalize, segment (6 s overlap), and label windows.

    Windows with mixed labels and windows outside the studied activity subset
    are dropped; the surviving windows keep their original start indices so the
    grid stays aligned with the unlabeled segmentation.
    """
    x = _filter_and_normalize(record)
    ws = segment(x, record.fs_ppg, WINDOW_S, TEST_OVERLAP_S, subject_id=record.subject_id)
    codes = label_windows(
        record.labels, record.fs_lab, WINDOW_S, TEST_OVERLAP_S,
        fs_ppg=record.fs_ppg, n_windows=len(ws),
    )
    kept = tuple(
        Window(w.samples, w.subject_id, w.start_index, label=code)
        for w, code in zip(ws, codes)
        if code is not None and code_table.is_studied(code)
    )
    return WindowSet(kept)
