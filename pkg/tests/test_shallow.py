import numpy as np
import pytest

from oracles import brute_knn_scores, gd_softmax_regression, softmax_probs
from ppgssl.errors import InsufficientDataError
from ppgssl.shallow import (
    BI_NEIGHBORS,
    K_SCHEDULE,
    LrModel,
    k_for_n,
    knn_fit,
    knn_predict_scores,
    lr_fit,
    lr_predict_scores,
)


class TestKSchedule:
    def test_values(self):
        assert K_SCHEDULE == {2: 8, 5: 19, 10: 39, 50: 115, 1000: 350}
        assert k_for_n(5) == 19
        assert k_for_n(1000) == 350
        assert BI_NEIGHBORS == 20

    def test_unknown_size(self):
        with pytest.raises(ValueError, match="n_per_class=3"):
            k_for_n(3)


class TestKnn:
    def test_exact_match_scores_one(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        y = np.array([0, 1, 1])
        model = knn_fit(x, y, k=2)
        scores = knn_predict_scores(model, np.array([[1.0, 1.0]]))
        np.testing.assert_array_equal(scores, [[0.0, 1.0]])

    def test_k1_is_one_hot(self, rng):
        x = rng.standard_normal((10, 3))
        y = rng.integers(0, 3, 10)
        model = knn_fit(x, y, k=1)
        q = x + 0.01 * rng.standard_normal(x.shape)
        scores = knn_predict_scores(model, q)
        assert set(np.unique(scores)) <= {0.0, 1.0}

    def test_hand_case_inverse_distance(self):
        # neighbors at distances 1, 2, 2 with classes a, b, b:
        # weights 1, 1/2, 1/2 -> a: 1/2, b: 1/2
        x = np.array([[1.0], [2.0], [-2.0]])
        y = np.array([0, 1, 1])
        model = knn_fit(x, y, k=3)
        scores = knn_predict_scores(model, np.array([[0.0]]))
        np.testing.assert_allclose(scores, [[0.5, 0.5]], rtol=1e-12)

    def test_rows_sum_to_one(self, rng):
        x = rng.standard_normal((30, 4))
        y = rng.integers(0, 5, 30)
        model = knn_fit(x, y, k=7, classes=(0, 1, 2, 3, 4))
        scores = knn_predict_scores(model, rng.standard_normal((12, 4)))
        np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-12)

    def test_matches_brute_force_exactly(self, rng):
        x = rng.standard_normal((200, 6))
        y = rng.integers(0, 5, 200)
        classes = (0, 1, 2, 3, 4)
        model = knn_fit(x, y, k=11, classes=classes)
        queries = np.concatenate([rng.standard_normal((20, 6)), x[:5]])  # include exact hits
        mine = knn_predict_scores(model, queries)
        brute = brute_knn_scores(x, y, queries, 11, classes)
        np.testing.assert_array_equal(mine, brute)

    def test_rotation_and_translation_invariance(self, rng):
        x = rng.standard_normal((40, 5))
        y = rng.integers(0, 3, 40)
        q = rng.standard_normal((8, 5))
        base = knn_predict_scores(knn_fit(x, y, k=5), q)
        for trial in range(5):
            mat = rng.standard_normal((5, 5))
            orth, _ = np.linalg.qr(mat)
            shift = rng.standard_normal(5)
            moved = knn_predict_scores(knn_fit(x @ orth + shift, y, k=5), q @ orth + shift)
            np.testing.assert_allclose(moved, base, atol=1e-9)

    def test_k_bounds(self, rng):
        x = rng.standard_normal((5, 2))
        y = np.zeros(5, dtype=int)
        with pytest.raises(ValueError):
            knn_fit(x, y, k=6)
        with pytest.raises(ValueError):
            knn_fit(x, y, k=0)
        with pytest.raises(InsufficientDataError):
            knn_fit(np.zeros((0, 2)), np.zeros(0, dtype=int), k=1)

    def test_dimension_mismatch(self, rng):
        model = knn_fit(rng.standard_normal((5, 3)), np.arange(5) % 2, k=2)
        with pytest.raises(ValueError, match="dimension"):
            knn_predict_scores(model, rng.standard_normal((2, 4)))


class TestLogisticRegression:
    def test_symmetric_two_class_boundary(self):
        x = np.array([[-1.0], [-1.0], [1.0], [1.0]])
        y = np.array([0, 0, 1, 1])
        model = lr_fit(x, y)
        # class-1 logit must grow with x; boundary at 0 by symmetry
        assert model.weights[1, 0] > model.weights[0, 0]
        mid = lr_predict_scores(model, np.array([[0.0]]))
        np.testing.assert_allclose(mid, [[0.5, 0.5]], atol=1e-6)

    def test_duplication_invariance(self, rng):
        x = rng.standard_normal((20, 3))
        y = rng.integers(0, 3, 20)
        single = lr_fit(x, y)
        doubled = lr_fit(np.concatenate([x, x]), np.concatenate([y, y]))
        np.testing.assert_allclose(doubled.weights, single.weights, atol=1e-5)
        np.testing.assert_allclose(doubled.intercepts, single.intercepts, atol=1e-5)

    def test_probability_rows_sum_to_one(self, rng):
        x = rng.standard_normal((30, 4))
        y = rng.integers(0, 5, 30)
        scores = lr_predict_scores(lr_fit(x, y), rng.standard_normal((10, 4)))
        np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-12)

    def test_zero_weight_model_is_uniform(self):
        model = LrModel(weights=np.zeros((5, 2)), intercepts=np.zeros(5),
                        classes=(0, 1, 2, 3, 4), l2_strength=1.0)
        scores = lr_predict_scores(model, np.array([[3.0, -1.0]]))
        np.testing.assert_allclose(scores, 0.2, rtol=1e-12)

    def test_monotone_in_own_logit(self):
        model = LrModel(weights=np.array([[1.0], [0.0]]), intercepts=np.zeros(2),
                        classes=(0, 1), l2_strength=1.0)
        scores = lr_predict_scores(model, np.array([[0.0], [1.0], [2.0]]))
        assert scores[0, 0] < scores[1, 0] < scores[2, 0]

    def test_hand_softmax_case(self):
        w = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
        b = np.array([0.1, -0.1, 0.0])
        model = LrModel(weights=w, intercepts=b, classes=(0, 1, 2), l2_strength=1.0)
        x = np.array([[2.0, -1.0]])
        logits = np.array([2.0 + 0.1, -1.0 - 0.1, -1.0])
        expected = np.exp(logits) / np.exp(logits).sum()
        np.testing.assert_allclose(lr_predict_scores(model, x)[0], expected, rtol=1e-12)

    def test_matches_gradient_descent_oracle(self, rng):
        x = rng.standard_normal((50, 4))
        y = rng.integers(0, 3, 50)
        model = lr_fit(x, y)
        w, b = gd_softmax_regression(x, y, classes=sorted(set(y.tolist())))
        q = rng.standard_normal((25, 4))
        mine = lr_predict_scores(model, q)
        theirs = softmax_probs(q, w, b)
        assert np.abs(mine - theirs).max() < 1e-4

    def test_loss_non_increasing(self, rng):
        x = rng.standard_normal((40, 3))
        y = rng.integers(0, 4, 40)
        model = lr_fit(x, y)
        losses = np.array(model.losses)
        assert len(losses) > 2
        assert np.all(np.diff(losses) <= 1e-12)

    def test_single_class_rejected(self, rng):
        with pytest.raises(InsufficientDataError):
            lr_fit(rng.standard_normal((5, 2)), np.zeros(5, dtype=int))

    def test_nonfinite_rejected(self):
        x = np.array([[1.0], [np.inf]])
        with pytest.raises(ValueError, match="non-finite"):
            lr_fit(x, np.array([0, 1]))
