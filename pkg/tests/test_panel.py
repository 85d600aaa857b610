import numpy as np
import pytest

from s3f.exceptions import ArgumentError, SchemaError
from s3f.gbt import AdaBoostStumps, LogisticRegressionGD, RandomForest, RidgeRegression
from s3f.gbt.panel import evaluate_panel, fit_panel, macro_f1, r2_score
from s3f.tabular import split

from conftest import make_table


class TestScores:
    def test_macro_f1_perfect(self):
        assert macro_f1([0, 1, 2], [0, 1, 2]) == 1.0

    def test_macro_f1_unseen_class_gets_zero_credit(self):
        # class 2 appears only in the truth: precision/recall are 0 for it
        assert macro_f1([0, 0, 2], [0, 0, 0]) == pytest.approx((0.8 + 0.0) / 2)

    def test_r2_constant_target_is_zero(self):
        assert r2_score([3.0, 3.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_r2_perfect(self):
        assert r2_score([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0


def blob_table(n=90, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    label = rng.integers(0, 3, n)
    X = centers[label] + rng.normal(0, 0.6, size=(n, 2))
    return make_table(
        [
            ("u", "c", X[:, 0]),
            ("v", "c", X[:, 1]),
            ("cls", ["a", "b", "c"], label),
        ],
        target=2,
    )


def line_table(n=120, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    k = rng.integers(0, 2, n)
    y = 3.0 * x + 2.0 * k + rng.normal(0, 0.2, n)
    return make_table(
        [("x", "c", x), ("k", ["p", "q"], k), ("y", "c", y)],
        target=2,
    )


class TestIndividualLearners:
    def test_forest_classifier_separates_blobs(self):
        t = blob_table()
        X = t.values[:, :2]
        y = t.target_codes()
        model = RandomForest("classification", n_estimators=30).fit(X, y)
        assert (model.predict(X) == y).mean() > 0.95

    def test_forest_regressor(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, size=(200, 2))
        y = X[:, 0] ** 2 + X[:, 1]
        model = RandomForest("regression", n_estimators=30).fit(X, y)
        assert r2_score(y, model.predict(X)) > 0.9

    def test_adaboost_stumps(self):
        t = blob_table()
        X = t.values[:, :2]
        y = t.target_codes()
        model = AdaBoostStumps(n_estimators=50).fit(X, y)
        assert (model.predict(X) == y).mean() > 0.9

    def test_logistic_gd(self):
        t = blob_table(n=150)
        X = t.values[:, :2]
        y = t.target_codes()
        model = LogisticRegressionGD().fit(X, y)
        assert (model.predict(X) == y).mean() > 0.9

    def test_ridge_recovers_line(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(100, 2))
        y = 2.0 * X[:, 0] - 1.0 * X[:, 1] + 0.5
        model = RidgeRegression().fit(X, y)
        assert r2_score(y, model.predict(X)) > 0.999


class TestPanel:
    def test_panel_has_four_members(self):
        t = blob_table()
        members = fit_panel(t, "classification", seed=0)
        assert [name for name, _, _ in members] == ["gbt", "forest", "stumps", "linear"]

    def test_train_equals_test_is_perfect_on_separable(self):
        t = blob_table(seed=2)
        mean, details = evaluate_panel(t, t, "classification", seed=0, return_details=True)
        assert mean == 1.0
        assert all(v == 1.0 for v in details.values())

    def test_regression_panel(self):
        t = line_table()
        train, test = split(t, 0.25, seed=0, stratify=False)
        mean = evaluate_panel(train, test, "regression", seed=0)
        assert mean > 0.8

    def test_panel_deterministic(self):
        t = blob_table(seed=3)
        train, test = split(t, 0.3, seed=1)
        a = evaluate_panel(train, test, "classification", seed=4)
        b = evaluate_panel(train, test, "classification", seed=4)
        assert a == b

    def test_iris_panel_strong(self, iris_table):
        train, test = split(iris_table, 0.2, seed=0, stratify=True)
        mean = evaluate_panel(train, test, "classification", seed=0)
        assert mean >= 0.9

    def test_schema_mismatch_rejected(self):
        a = blob_table()
        b = line_table()
        with pytest.raises(SchemaError):
            evaluate_panel(a, b, "classification")

    def test_unknown_task(self):
        t = blob_table()
        with pytest.raises(ArgumentError):
            fit_panel(t, "ranking")

    def test_missing_target_rejected(self):
        t = make_table([("x", "c", [1.0, 2.0])])
        with pytest.raises(SchemaError):
            fit_panel(t, "classification")
