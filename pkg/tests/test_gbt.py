import json

import numpy as np
import pytest

from s3f.exceptions import ArgumentError, NumericError, SchemaError
from s3f.gbt import GbtClassifier, GbtRegressor, fit_classifier, fit_regressor
from s3f.gbt._tree import TreeArrays


def walk_depths(tree):
    """Depth of every node, computed from the stored arrays."""
    depths = {0: 0}
    stack = [0]
    while stack:
        node = stack.pop()
        if tree.feature[node] >= 0:
            for child in (tree.left[node], tree.right[node]):
                depths[child] = depths[node] + 1
                stack.append(child)
    return depths


def leaf_counts(tree, X):
    """Training rows routed to each leaf."""
    counts = {}
    for row in X:
        node = 0
        while tree.feature[node] >= 0:
            node = tree.left[node] if row[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
        counts[node] = counts.get(node, 0) + 1
    return counts


class TestRegressor:
    def test_constant_target_is_base_score_only(self):
        X = np.random.default_rng(0).normal(size=(50, 2))
        y = np.full(50, 3.0)
        model = fit_regressor(X, y, n_estimators=10)
        assert model.base_score_ == 3.0
        assert np.all(model.predict(X) == 3.0)
        # every tree degenerates to a single zero leaf
        assert all(t.n_nodes == 1 for t in model.trees_)

    def test_single_split_beats_variance(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0.0, 1.0])
        model = fit_regressor(X, y, n_estimators=1, max_depth=1, learning_rate=1.0)
        mse = np.mean((model.predict(X) - y) ** 2)
        assert mse < np.var(y)

    def test_training_mse_monotone_on_random_data(self):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(200, 3))
            y = rng.normal(size=200)
            model = fit_regressor(X, y, n_estimators=100)
            losses = model.train_losses_
            assert len(losses) == 101
            assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))

    def test_single_leaf_model_predicts_value(self):
        model = GbtRegressor.from_dict(
            {
                "kind": "gbt_regressor",
                "version": 1,
                "params": {"n_estimators": 1, "learning_rate": 1.0, "max_depth": 6,
                           "min_samples_leaf": 1, "random_state": 0},
                "base_score": 0.0,
                "n_features": 1,
                "trees": [[[2.0]]],
            }
        )
        assert np.all(model.predict(np.array([[0.3], [100.0]])) == 2.0)

    def test_predictions_match_residual_bookkeeping(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(120, 3))
        y = np.sin(X[:, 0]) + rng.normal(0, 0.2, 120)
        model = fit_regressor(X, y, n_estimators=30)
        # independent replay: accumulate per-tree outputs by hand
        acc = np.full(120, model.base_score_)
        for tree in model.trees_:
            acc += model.learning_rate * tree.predict(X)[:, 0]
        assert np.allclose(model.predict(X), acc, atol=1e-12)
        assert np.allclose(np.mean((y - acc) ** 2), model.train_losses_[-1], atol=1e-12)

    def test_deterministic_predictions_and_bytes(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(80, 2))
        y = rng.normal(size=80)
        m1 = fit_regressor(X, y, n_estimators=15)
        m2 = fit_regressor(X, y, n_estimators=15)
        assert m1.to_json() == m2.to_json()
        assert np.array_equal(m1.predict(X), m2.predict(X))

    def test_structure_respects_depth_and_leaf_size(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(150, 3))
        y = rng.normal(size=150)
        model = fit_regressor(X, y, n_estimators=10, max_depth=3, min_samples_leaf=5)
        for tree in model.trees_:
            depths = walk_depths(tree)
            assert max(depths.values()) <= 3
            for node, count in leaf_counts(tree, X).items():
                assert count >= 5

    def test_width_mismatch(self):
        model = fit_regressor(np.zeros((4, 2)), np.arange(4.0), n_estimators=1)
        with pytest.raises(SchemaError):
            model.predict(np.zeros((3, 5)))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            fit_regressor(np.array([[np.inf]]), np.array([1.0]))
        with pytest.raises(NumericError):
            fit_regressor(np.array([[1.0]]), np.array([np.nan]))

    def test_empty_rejected(self):
        with pytest.raises(ArgumentError):
            fit_regressor(np.zeros((0, 2)), np.zeros(0))

    def test_serialization_round_trip_bit_exact(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(60, 2))
        y = rng.normal(size=60)
        model = fit_regressor(X, y, n_estimators=8)
        clone = GbtRegressor.from_dict(json.loads(model.to_json()))
        Xq = rng.normal(size=(40, 2))
        assert np.array_equal(model.predict(Xq), clone.predict(Xq))


class TestClassifier:
    def test_separable_data_perfect_accuracy(self):
        X = np.array([[0.0], [0.1], [0.9], [1.0]])
        y = np.array([0, 0, 1, 1])
        model = fit_classifier(X, y, n_estimators=20)
        assert np.array_equal(model.predict(X), y)

    def test_single_class_degenerate(self):
        X = np.zeros((5, 2))
        y = np.zeros(5, dtype=int)
        model = fit_classifier(X, y)
        proba = model.predict_proba(np.ones((3, 2)))
        assert proba.shape == (3, 1)
        assert np.all(proba == 1.0)

    def test_three_class_blobs_beat_uniform_logloss(self):
        rng = np.random.default_rng(3)
        centers = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
        X = np.vstack([rng.normal(c, 0.5, size=(20, 2)) for c in centers])
        y = np.repeat([0, 1, 2], 20)
        model = fit_classifier(X, y, n_estimators=115)
        assert model.train_losses_[0] == pytest.approx(np.log(3.0), abs=1e-9)
        assert model.train_losses_[-1] < np.log(3.0)

    def test_logloss_monotone_on_random_data(self):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(80, 3))
            y = rng.integers(0, 3, size=80)
            model = fit_classifier(X, y, n_estimators=40)
            losses = model.train_losses_
            assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))

    def test_zero_rounds_gives_uniform(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        y = np.array([0, 1, 2] * 3 + [0])
        model = fit_classifier(X, y, n_estimators=0)
        proba = model.predict_proba(X)
        assert np.allclose(proba, 1.0 / 3.0)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 4, size=60)
        model = fit_classifier(X, y, n_estimators=25)
        proba = model.predict_proba(rng.normal(size=(200, 3)))
        assert np.all(proba >= 0.0)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    def test_empty_inputs_rejected(self):
        with pytest.raises(ArgumentError):
            fit_classifier(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_zero_width_inputs_learn_priors(self):
        # intercept-only boosting converges to the empirical class frequencies
        y = np.array([0] * 70 + [1] * 30)
        model = fit_classifier(np.zeros((100, 0)), y, n_estimators=115)
        proba = model.predict_proba(np.zeros((5, 0)))
        assert np.allclose(proba, [0.7, 0.3], atol=0.01)

    def test_serialization_round_trip_bit_exact(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(60, 2))
        y = rng.integers(0, 3, size=60)
        model = fit_classifier(X, y, n_estimators=10)
        clone = GbtClassifier.from_dict(json.loads(model.to_json()))
        Xq = rng.normal(size=(30, 2))
        assert np.array_equal(model.predict_proba(Xq), clone.predict_proba(Xq))

    def test_explicit_cardinality_with_missing_level(self):
        X = np.array([[0.0], [1.0], [2.0]])
        model = fit_classifier(X, np.array([0, 0, 2]), n_classes=3, n_estimators=10)
        proba = model.predict_proba(X)
        assert proba.shape == (3, 3)
        assert np.all(proba[:, 1] < 0.5)
