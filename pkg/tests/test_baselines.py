"""Classical baseline classifiers: accuracy oracles and analytic properties."""

import numpy as np
import pytest

from hsiseg.baselines import (
    SgdConfig,
    lda_decision,
    lda_fit,
    lda_predict,
    nb_fit,
    nb_predict,
    qda_fit,
    qda_predict,
    sgd_fit,
    sgd_predict,
)

from conftest import gaussian_blobs


class TestBlobAccuracy:
    """Well-separated unit-variance blobs: all models should be near Bayes-optimal."""

    def _split(self, seed):
        x, y = gaussian_blobs(400, 2, seed=seed)
        xt, yt = gaussian_blobs(400, 2, seed=seed + 100)
        return x, y, xt, yt

    @pytest.mark.parametrize("fit,predict", [
        (nb_fit, nb_predict), (lda_fit, lda_predict), (qda_fit, qda_predict),
    ])
    def test_generative_models(self, fit, predict):
        x, y, xt, yt = self._split(0)
        model = fit(x, y)
        assert (predict(model, xt) == yt).mean() >= 0.999

    def test_sgd(self):
        x, y, xt, yt = self._split(1)
        model = sgd_fit(x, y, SgdConfig(lr=0.01, epochs=5, seed=0))
        assert (sgd_predict(model, xt) == yt).mean() >= 0.999


class TestGaussianNB:
    def test_single_point_per_class_is_nearest_mean(self):
        x = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        y = np.array([0, 1, 2])
        model = nb_fit(x, y)
        queries = np.array([[1.0, 1.0], [9.0, 1.0], [1.0, 9.0]])
        np.testing.assert_array_equal(nb_predict(model, queries), [0, 1, 2])

    def test_variance_floor_applied(self):
        model = nb_fit(np.array([[1.0], [1.0], [5.0]]), np.array([0, 0, 1]), classes=2)
        assert model.variances.min() >= 1e-9

    def test_channel_with_equal_class_distributions_cancels(self):
        # the log posterior is additive over channels, so a channel whose
        # per-class statistics coincide cannot change the argmax
        rng = np.random.default_rng(2)
        x, y = gaussian_blobs(200, 3, seed=2)
        xt = rng.normal(size=(50, 3)) * 3
        base = nb_predict(nb_fit(x, y), xt)
        x_ext = np.column_stack([x, np.full(len(x), 7.0)])
        xt_ext = np.column_stack([xt, np.full(len(xt), 7.0)])
        extended = nb_predict(nb_fit(x_ext, y), xt_ext)
        np.testing.assert_array_equal(base, extended)

    def test_absent_class_rejected(self):
        with pytest.raises(ValueError):
            nb_fit(np.zeros((4, 2)), np.array([0, 0, 1, 1]))


class TestLda:
    def test_decision_values_affine_along_lines(self):
        x, y = gaussian_blobs(300, 2, seed=4)
        model = lda_fit(x, y)
        origin = np.zeros(2)
        direction = np.array([0.7, -0.2])
        ts = np.linspace(-3, 3, 7)
        values = lda_decision(model, origin + ts[:, None] * direction)
        second_diff = np.diff(values, n=2, axis=0)
        np.testing.assert_allclose(second_diff, 0.0, atol=1e-9)

    def test_duplication_invariance(self):
        x, y = gaussian_blobs(150, 2, seed=5)
        xt = np.random.default_rng(6).normal(size=(40, 2)) * 3
        base = lda_predict(lda_fit(x, y), xt)
        doubled = lda_predict(lda_fit(np.tile(x, (2, 1)), np.tile(y, 2)), xt)
        np.testing.assert_array_equal(base, doubled)


class TestQdaEqualsLda:
    def test_exact_agreement_on_shared_covariance(self):
        # identical point cloud translated to three means: per-class sample
        # covariances are exactly equal, so QDA must reproduce LDA
        rng = np.random.default_rng(7)
        base = rng.normal(size=(120, 3)) @ np.diag([1.0, 0.5, 2.0])
        base -= base.mean(axis=0)
        means = np.array([[0.0, 0, 0], [8.0, 0, 0], [0.0, 8, 0]])
        x = np.concatenate([base + m for m in means])
        y = np.repeat([0, 1, 2], len(base))
        lda, qda = lda_fit(x, y), qda_fit(x, y)
        grid = rng.normal(size=(500, 3)) * 6
        np.testing.assert_array_equal(lda_predict(lda, grid), qda_predict(qda, grid))

    def test_qda_needs_enough_samples(self):
        with pytest.raises(ValueError):
            qda_fit(np.zeros((6, 5)), np.array([0, 0, 1, 1, 2, 2]))


class TestSgd:
    def test_separable_one_channel(self):
        rng = np.random.default_rng(8)
        x = np.concatenate([rng.uniform(-2, -1, 200), rng.uniform(1, 2, 200)])[:, None]
        y = np.repeat([0, 1], 200)
        model = sgd_fit(x, y, SgdConfig(lr=0.01, epochs=5, seed=0), classes=2)
        assert (sgd_predict(model, x) == y).mean() == 1.0

    def test_zero_epochs_predicts_constant_class(self):
        x, y = gaussian_blobs(50, 2, seed=9)
        model = sgd_fit(x, y, SgdConfig(lr=0.01, epochs=0, seed=0))
        preds = sgd_predict(model, x)
        assert np.all(preds == 0)  # zero logits tie, argmax picks class 0

    def test_seed_determinism(self):
        x, y = gaussian_blobs(100, 2, seed=10)
        m1 = sgd_fit(x, y, SgdConfig(seed=3))
        m2 = sgd_fit(x, y, SgdConfig(seed=3))
        np.testing.assert_array_equal(m1.weight, m2.weight)
        np.testing.assert_array_equal(m1.bias, m2.bias)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sgd_fit(np.zeros((0, 2)), np.zeros(0))


class TestDuplicationInvariance:
    @pytest.mark.parametrize("fit,predict", [
        (nb_fit, nb_predict), (lda_fit, lda_predict), (qda_fit, qda_predict),
    ])
    def test_uniform_duplication_leaves_estimates_unchanged(self, fit, predict):
        x, y = gaussian_blobs(120, 2, seed=11)
        xt = np.random.default_rng(12).normal(size=(60, 2)) * 4
        base = predict(fit(x, y), xt)
        tripled = predict(fit(np.tile(x, (3, 1)), np.tile(y, 3)), xt)
        np.testing.assert_array_equal(base, tripled)
