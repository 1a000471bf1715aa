import numpy as np
import pytest

from ppgssl.errors import InterchangeFormatError
from ppgssl.nn import (
    build_cnn_ae,
    build_cnn_lstm,
    build_from_tag,
    build_simple_baseline,
    encode_windows,
    load_model,
    save_model,
)
from ppgssl.nn.builders import POOL_PLANS


class TestParamCounts:
    def test_cnn_ae(self):
        assert build_cnn_ae(64).count_params() == (538506, 537734, 772)

    def test_simple_baseline(self):
        assert build_simple_baseline().count_params() == (269578, 269192, 386)

    def test_cnn_lstm(self):
        assert build_cnn_lstm().count_params() == (10693, 10629, 64)

    @pytest.mark.parametrize("latent_dim", sorted(POOL_PLANS))
    def test_variants_share_param_counts(self, latent_dim):
        # pool factors carry no parameters, so every width matches the published counts
        assert build_cnn_ae(latent_dim).count_params() == (538506, 537734, 772)

    def test_unsupported_width(self):
        with pytest.raises(ValueError, match="unsupported"):
            build_cnn_ae(100)


class TestForwardShapes:
    def test_cnn_ae_layer_shapes(self):
        model = build_cnn_ae(64)
        shapes = model.output_shapes((2, 512, 1))
        expected = [
            (2, 512, 64), (2, 512, 64), (2, 512, 64), (2, 256, 64),
            (2, 256, 128), (2, 256, 128), (2, 256, 128), (2, 128, 128),
            (2, 128, 1), (2, 128, 1), (2, 128, 1), (2, 64, 1),
            (2, 64, 64), (2, 64, 64), (2, 64, 64), (2, 128, 64),
            (2, 128, 128), (2, 128, 128), (2, 128, 128), (2, 256, 128),
            (2, 256, 1), (2, 256, 1), (2, 256, 1), (2, 512, 1),
        ]
        assert shapes == expected

    def test_simple_baseline_shapes(self):
        model = build_simple_baseline()
        shapes = model.output_shapes((2, 512, 1))
        assert shapes[-3:] == [(2, 64), (2, 5), (2, 5)]
        out = model.infer_mode().forward(np.random.default_rng(0).standard_normal((2, 512, 1)).astype(np.float32))
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-6)

    def test_cnn_lstm_shapes(self):
        shapes = build_cnn_lstm().output_shapes((2, 512, 1))
        assert shapes == [
            (2, 449, 32), (2, 449, 32), (2, 449, 32), (2, 112, 32),
            (2, 112, 32), (2, 32), (2, 5), (2, 5),
        ]

    @pytest.mark.parametrize("latent_dim", sorted(POOL_PLANS))
    def test_variant_bottleneck_and_output(self, latent_dim):
        model = build_cnn_ae(latent_dim)
        shapes = model.output_shapes((1, 512, 1))
        bottleneck = shapes[model.encoder_len - 1]
        assert bottleneck[1] * bottleneck[2] == latent_dim
        assert shapes[-1] == (1, 512, 1)

    def test_simple_baseline_prefix_matches_encoder(self):
        ae = build_cnn_ae(64)
        clf = build_simple_baseline()
        for a_layer, c_layer in zip(ae.layers[: ae.encoder_len], clf.layers):
            assert type(a_layer) is type(c_layer)
            for name in a_layer.params:
                assert a_layer.params[name].shape == c_layer.params[name].shape


class TestEncode:
    def test_latent_width(self):
        model = build_cnn_ae(64)
        h = encode_windows(model, np.zeros((3, 512), np.float32))
        assert h.shape == (3, 64)

    def test_encode_deterministic_and_batch_invariant(self, rng):
        model = build_cnn_ae(64)
        x = rng.standard_normal((5, 512)).astype(np.float32)
        a = encode_windows(model, x)
        b = encode_windows(model, x)
        np.testing.assert_array_equal(a, b)
        one_by_one = np.concatenate([encode_windows(model, x[i : i + 1]) for i in range(5)])
        # float32 GEMMs may reassociate across batch sizes; only ulp-level drift is allowed
        np.testing.assert_allclose(a, one_by_one, rtol=0, atol=1e-5)

    def test_encode_not_constant(self, rng):
        model = build_cnn_ae(64)
        model.initialize(np.random.default_rng(3))
        x = rng.standard_normal((4, 512)).astype(np.float32)
        h = encode_windows(model, x)
        assert np.std(h, axis=0).max() > 1e-6

    def test_encode_requires_encoder_split(self):
        with pytest.raises(ValueError, match="encoder"):
            encode_windows(build_cnn_lstm(), np.zeros((1, 512), np.float32))

    def test_encode_single_window_keeps_tags(self, rng):
        from ppgssl.dsp import Window
        from ppgssl.nn import encode

        window = Window(rng.standard_normal(512).astype(np.float32),
                        subject_id=4, start_index=128, label=7)
        latent = encode(build_cnn_ae(64), window)
        assert latent.h.shape == (64,)
        assert latent.subject_id == 4 and latent.label == 7


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        model = build_cnn_ae(64)
        model.initialize(np.random.default_rng(17))
        x = rng.standard_normal((2, 512)).astype(np.float32)
        path = tmp_path / "ae.ppgm"
        save_model(model, path)
        back = load_model(path)
        assert back.tag == "cnn_ae" and back.latent_dim == 64
        np.testing.assert_array_equal(encode_windows(model, x), encode_windows(back, x))

    def test_save_is_deterministic(self, tmp_path):
        model = build_cnn_ae(64)
        save_model(model, tmp_path / "a.ppgm")
        save_model(model, tmp_path / "b.ppgm")
        assert (tmp_path / "a.ppgm").read_bytes() == (tmp_path / "b.ppgm").read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.ppgm"
        path.write_bytes(b"XXXX" + b"\0" * 32)
        with pytest.raises(InterchangeFormatError):
            load_model(path)

    def test_all_tags_round_trip(self, tmp_path):
        for tag, builder in [
            ("cnn_ae", lambda: build_cnn_ae(8)),
            ("simple_baseline", build_simple_baseline),
            ("cnn_lstm", build_cnn_lstm),
        ]:
            model = builder()
            path = tmp_path / f"{tag}.ppgm"
            save_model(model, path)
            back = load_model(path)
            assert back.tag == tag
            assert back.count_params() == model.count_params()

    def test_build_from_tag_rejects_unknown(self):
        with pytest.raises(ValueError):
            build_from_tag("transformer")
