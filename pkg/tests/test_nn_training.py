import numpy as np
import pytest

from ppgssl.dsp import Window, WindowSet
from ppgssl.errors import NonFiniteLossError
from ppgssl.nn import Adam, TrainConfig, build_cnn_ae, clip_by_norm, train
from ppgssl.nn.layers import Dense
from ppgssl.nn.model import Model
from ppgssl.nn.training import predict


class TestAdam:
    def test_initial_rate(self):
        opt = Adam(0.01, decay=0.001)
        assert opt.effective_lr() == 0.01

    def test_inverse_time_decay(self):
        opt = Adam(0.01, decay=0.001)
        opt.t = 1000
        assert opt.effective_lr() == pytest.approx(0.005, rel=1e-12)

    def test_clipnorm(self):
        g = np.array([2.0, 0.0])
        clipped = clip_by_norm(g, 0.9)
        assert np.linalg.norm(clipped) == pytest.approx(0.9, rel=1e-12)
        small = np.array([0.3, 0.4])  # norm 0.5
        np.testing.assert_array_equal(clip_by_norm(small, 0.9), small)

    def test_single_step_matches_hand_formula(self):
        p = np.array([1.0])
        g = np.array([0.5])
        opt = Adam(0.1, decay=0.0, clipnorm=None)
        opt.step([("p", p, g)])
        # m_hat = g, v_hat = g^2 -> step = lr * g/(|g| + eps)
        assert p[0] == pytest.approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-7), rel=1e-9)

    def test_counter_increments_once_per_step(self):
        p, g = np.zeros(2), np.ones(2)
        opt = Adam(0.01)
        for _ in range(3):
            opt.step([("p", p, g)])
        assert opt.t == 3

    def test_nonfinite_gradient_rejected(self):
        opt = Adam(0.01)
        with pytest.raises(NonFiniteLossError):
            opt.step([("p", np.zeros(2), np.array([np.nan, 1.0]))])


class TestTrainConfig:
    def test_defaults_valid(self):
        cfg = TrainConfig()
        assert cfg.learning_rate == 0.01 and cfg.decay == 0.001 and cfg.clipnorm == 0.9
        assert cfg.batch_size == 128 and cfg.epochs == 200

    @pytest.mark.parametrize("kwargs", [
        {"epochs": 0},
        {"learning_rate": 0.0},
        {"clipnorm": -1.0},
        {"batch_size": 0},
        {"loss": "hinge"},
    ])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


def _tiny_ae():
    """Two-dense 'autoencoder' stand-in over length-8 windows for fast loop tests."""
    from ppgssl.nn.layers import Reshape

    layers = [Reshape((8,)), Dense(8, 3), Dense(3, 8), Reshape((8, 1))]
    return Model(layers, tag="cnn_ae", encoder_len=2, latent_dim=3)


def _window_set(labels=None, n=16, length=8, seed=0):
    rng = np.random.default_rng(seed)
    wins = []
    for i in range(n):
        lab = None if labels is None else labels[i % len(labels)]
        wins.append(Window(rng.standard_normal(length).astype(np.float32), 1, i, lab))
    return WindowSet(tuple(wins))


class TestTrainLoop:
    def test_loss_decreases(self):
        data = _window_set(n=16)
        cfg = TrainConfig(learning_rate=0.01, epochs=60, batch_size=8, seed=4)
        hist = train(_tiny_ae(), data, cfg)
        assert hist.epoch_losses[-1] < 0.5 * hist.epoch_losses[0]

    def test_bit_identical_reruns(self):
        data = _window_set(n=12)
        cfg = TrainConfig(epochs=5, batch_size=4, seed=7)
        m1, m2 = _tiny_ae(), _tiny_ae()
        h1 = train(m1, data, cfg)
        h2 = train(m2, data, cfg)
        assert h1.epoch_losses == h2.epoch_losses
        for (n1, l1, p1), (_, l2, p2) in zip(m1.named_params(), m2.named_params()):
            assert l1.params[p1].tobytes() == l2.params[p2].tobytes(), n1

    def test_different_seeds_differ(self):
        data = _window_set(n=12)
        m1, m2 = _tiny_ae(), _tiny_ae()
        train(m1, data, TrainConfig(epochs=2, seed=1))
        train(m2, data, TrainConfig(epochs=2, seed=2))
        weights1 = m1.layers[1].params["kernel"]
        weights2 = m2.layers[1].params["kernel"]
        assert not np.array_equal(weights1, weights2)

    def test_zero_epochs_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)

    def test_nonfinite_loss_names_epoch_and_batch(self):
        bad = np.full((4, 8), np.nan, dtype=np.float32)
        with pytest.raises(NonFiniteLossError, match="epoch 0, batch 0"):
            train(_tiny_ae(), bad, TrainConfig(epochs=1, batch_size=4))

    def test_stop_below_cuts_training_short(self):
        data = _window_set(n=16)
        cfg = TrainConfig(epochs=500, batch_size=16, seed=4)
        hist = train(_tiny_ae(), data, cfg, stop_below=0.5)
        assert len(hist.epoch_losses) < 500
        assert hist.epoch_losses[-1] < 0.5

    def test_softmax_ce_needs_labels(self):
        data = _window_set(n=8)
        cfg = TrainConfig(loss="softmax_ce", epochs=1)
        from ppgssl.nn.layers import Reshape, Softmax

        model = Model([Reshape((8,)), Dense(8, 2), Softmax()], tag="clf")
        with pytest.raises(ValueError):
            train(model, data.matrix(), cfg)

    def test_classifier_training_runs(self):
        data = _window_set(labels=[1, 7], n=16)
        from ppgssl.nn.layers import Reshape, Softmax

        model = Model([Reshape((8,)), Dense(8, 2), Softmax()], tag="clf")
        cfg = TrainConfig(loss="softmax_ce", epochs=30, batch_size=8,
                          learning_rate=0.05, seed=2)
        hist = train(model, data, cfg, classes=[1, 7])
        assert hist.epoch_losses[-1] < hist.epoch_losses[0]

    def test_l2_terms_enter_objective(self):
        from ppgssl.nn.layers import Reshape, Softmax

        data = _window_set(labels=[1, 7], n=8)
        plain = Model([Reshape((8,)), Dense(8, 2), Softmax()], tag="clf")
        reg = Model([Reshape((8,)), Dense(8, 2, l2=10.0), Softmax()], tag="clf")
        cfg = TrainConfig(loss="softmax_ce", epochs=3, batch_size=8, seed=3)
        train(plain, data, cfg, classes=[1, 7])
        train(reg, data, cfg, classes=[1, 7])
        # the heavy penalty pulls the regularized kernel toward zero
        assert (np.abs(reg.layers[1].params["kernel"]).sum()
                < np.abs(plain.layers[1].params["kernel"]).sum())


class TestCnnAeTraining:
    def test_small_overfit_and_determinism(self):
        rng = np.random.default_rng(0)
        base = np.sin(np.linspace(0, 12 * np.pi, 512))
        x = np.stack([base * a for a in rng.uniform(0.5, 1.5, 8)]).astype(np.float32)
        cfg = TrainConfig(epochs=12, batch_size=8, seed=5)
        model = build_cnn_ae(64)
        hist = train(model, x, cfg)
        assert hist.epoch_losses[-1] < hist.epoch_losses[0]
        out = predict(model, x)
        assert out.shape == (8, 512, 1)
        assert np.all(np.isfinite(out))
