import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cascade_response, direct_form_filter
from ppgssl.data.synthetic import SyntheticConfig, synthesize_subject
from ppgssl.dsp import (
    FilterSpec,
    WINDOW_LEN,
    apply_filter,
    design_bandpass,
    label_windows,
    normalize_per_subject,
    preprocess_downstream,
    preprocess_pretext,
    segment,
)
from ppgssl.errors import InsufficientDataError, ZeroVarianceError

FS = 64.0


@pytest.fixture(scope="module")
def cascade():
    return design_bandpass(FilterSpec(fs=FS))


class TestDesign:
    def test_stable(self, cascade):
        assert cascade.is_stable()
        assert cascade.pole_magnitudes().max() < 1.0

    def test_passband_center(self, cascade):
        center = np.sqrt(0.1 * 6.0)  # geometric center ~0.775 Hz
        assert abs(cascade_response(cascade.sections, center, FS)) >= 0.95

    def test_structural_zero_at_dc(self, cascade):
        assert abs(cascade_response(cascade.sections, 0.0, FS)) == 0.0

    def test_structural_zero_at_nyquist(self, cascade):
        assert abs(cascade_response(cascade.sections, FS / 2, FS)) == 0.0

    def test_stopband(self, cascade):
        assert abs(cascade_response(cascade.sections, 0.01, FS)) < 0.1
        assert abs(cascade_response(cascade.sections, 20.0, FS)) < 0.1

    def test_bad_edges_rejected(self):
        with pytest.raises(ValueError):
            FilterSpec(fs=10.0, low_hz=0.1, high_hz=6.0)
        with pytest.raises(ValueError):
            FilterSpec(fs=64.0, low_hz=0.0, high_hz=6.0)

    def test_response_matches_oracle(self, cascade):
        for f in (0.1, 0.775, 3.0, 6.0, 10.0):
            mine = cascade.response_at(f, FS)
            theirs = cascade_response(cascade.sections, f, FS)
            assert abs(mine - theirs) < 1e-12


class TestApplyFilter:
    def test_matches_difference_equation(self, cascade, rng):
        x = rng.standard_normal(256)
        np.testing.assert_allclose(
            apply_filter(x, cascade), direct_form_filter(x, cascade.sections),
            rtol=0, atol=1e-9,
        )

    def test_constant_input_decays(self, cascade):
        x = np.full(int(40 * FS), 5.0)
        y = apply_filter(x, cascade)
        after_30s = y[int(30 * FS):]
        assert np.abs(after_30s).max() < 1e-3 * 5.0

    def test_zero_input(self, cascade):
        np.testing.assert_array_equal(apply_filter(np.zeros(100), cascade), np.zeros(100))

    def test_linearity(self, cascade, rng):
        x = rng.standard_normal(500)
        z = rng.standard_normal(500)
        lhs = apply_filter(3.5 * x + z, cascade)
        rhs = 3.5 * apply_filter(x, cascade) + apply_filter(z, cascade)
        assert np.abs(lhs - rhs).max() <= 1e-6 * max(np.abs(rhs).max(), 1.0)

    def test_nan_rejected(self, cascade):
        with pytest.raises(ValueError, match="non-finite"):
            apply_filter(np.array([1.0, np.nan]), cascade)


class TestNormalize:
    def test_basic(self):
        y = normalize_per_subject(np.array([1.0, 2.0, 3.0, 4.0]))
        assert abs(y.mean()) < 1e-6
        assert abs(y.var() - 1.0) < 1e-6

    def test_idempotent(self, rng):
        x = rng.standard_normal(1000)
        once = normalize_per_subject(x)
        twice = normalize_per_subject(once)
        assert np.abs(once - twice).max() < 1e-6

    def test_constant_rejected(self):
        with pytest.raises(ZeroVarianceError):
            normalize_per_subject(np.full(10, 3.0))


class TestSegment:
    def test_single_window(self):
        ws = segment(np.arange(512.0), FS, 8.0, 6.0)
        assert len(ws) == 1

    def test_counts_at_6s_overlap(self):
        ws = segment(np.zeros(3840), FS, 8.0, 6.0)
        assert len(ws) == 27  # floor((3840-512)/128)+1

    def test_counts_at_7s_overlap(self):
        ws = segment(np.zeros(3840), FS, 8.0, 7.0)
        assert len(ws) == 53  # floor((3840-512)/64)+1

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            segment(np.zeros(511), FS, 8.0, 6.0)

    @settings(max_examples=60, deadline=None)
    @given(
        length=st.integers(min_value=512, max_value=20000),
        overlap=st.sampled_from([0.0, 4.0, 6.0, 7.0, 7.5]),
    )
    def test_count_formula(self, length, overlap):
        step = int(round((8.0 - overlap) * FS))
        ws = segment(np.zeros(length), FS, 8.0, overlap)
        assert len(ws) == (length - WINDOW_LEN) // step + 1
        starts = [w.start_index for w in ws]
        assert starts == list(range(0, length - WINDOW_LEN + 1, step))


class TestLabelWindows:
    def test_constant_window_gets_code(self):
        labels = np.full(64, 4)
        out = label_windows(labels, 4.0, 8.0, 6.0, fs_ppg=FS, n_windows=2)
        assert out == [4, 4]

    def test_mixed_window_removed(self):
        labels = np.array([1] * 16 + [2] * 48)
        out = label_windows(labels, 4.0, 8.0, 6.0, fs_ppg=FS, n_windows=1)
        assert out == [None]

    def test_transient_window_labeled_zero(self):
        labels = np.zeros(32, dtype=int)
        out = label_windows(labels, 4.0, 8.0, 6.0, fs_ppg=FS, n_windows=1)
        assert out == [0]

    def test_short_stream_rejected(self):
        with pytest.raises(InsufficientDataError):
            label_windows(np.zeros(31), 4.0, 8.0, 6.0, fs_ppg=FS, n_windows=1)

    def test_alignment_against_raw_stream(self):
        # labels change every 10 s; windows straddling a change must be None
        fs_lab = 4.0
        labels = np.repeat([1, 2, 3], int(10 * fs_lab))
        out = label_windows(labels, fs_lab, 8.0, 6.0, fs_ppg=FS, n_windows=11)
        for i, code in enumerate(out):
            start, end = i * 2.0, i * 2.0 + 8.0
            span = labels[int(start * fs_lab): int(end * fs_lab)]
            if len(set(span.tolist())) == 1:
                assert code == span[0]
            else:
                assert code is None


@pytest.fixture(scope="module")
def record():
    cfg = SyntheticConfig(duration_s=60.0, activity_schedule=((1, 30.0), (7, 30.0)), seed=3)
    return synthesize_subject(cfg, 1)


class TestPreprocess:

    def test_pretext_test_role(self, record):
        ws = preprocess_pretext(record, "test")
        assert len(ws) == 27
        assert all(w.label is None for w in ws)

    def test_pretext_train_role(self, record):
        assert len(preprocess_pretext(record, "train")) == 53

    def test_bad_role(self, record):
        with pytest.raises(ValueError):
            preprocess_pretext(record, "validation")

    def test_normalization_is_global_not_per_window(self, record):
        ws = preprocess_pretext(record, "test")
        mat = ws.matrix()
        per_window_means = mat.mean(axis=1)
        # per-subject normalization leaves individual windows off-center
        assert np.abs(per_window_means).max() > 1e-3

    def test_pretext_deterministic(self, record):
        a = preprocess_pretext(record, "test").matrix()
        b = preprocess_pretext(record, "test").matrix()
        np.testing.assert_array_equal(a, b)

    def test_downstream_boundary_windows_dropped(self, record):
        ws = preprocess_downstream(record)
        # 27 grid positions; starts 24/26/28 s straddle the 30 s boundary
        assert len(ws) == 24
        starts_s = sorted(w.start_index / record.fs_ppg for w in ws)
        assert 24.0 not in starts_s and 26.0 not in starts_s and 28.0 not in starts_s
        for w in ws:
            expected = 1 if w.start_index / record.fs_ppg + 8.0 <= 30.0 else 7
            assert w.label == expected

    def test_downstream_codes_within_studied_subset(self, record):
        ws = preprocess_downstream(record)
        assert set(w.label for w in ws) <= {1, 2, 3, 4, 7}

    def test_all_transient_gives_empty_set(self):
        cfg = SyntheticConfig(duration_s=60.0, activity_schedule=((0, 60.0),), seed=3)
        rec = synthesize_subject(cfg, 1)
        assert len(preprocess_downstream(rec)) == 0

    def test_retained_windows_have_constant_raw_label_span(self, record):
        ws = preprocess_downstream(record)
        for w in ws:
            t0 = w.start_index / record.fs_ppg
            lab0 = int(round(t0 * record.fs_lab))
            span = record.labels[lab0: lab0 + int(8 * record.fs_lab)]
            assert len(set(span.tolist())) == 1
            assert span[0] == w.label
