"""Downstream-efficacy panel: four learners, macro-F1 / R2 scoring.

The panel mirrors the usual benchmark quartet: a gradient-boosted model,
a bagged random forest, boosted depth-1 stumps (SAMME for classification),
and a regularized linear model. Tree learners consume categorical features
as codes; the linear learner gets a standardized one-hot design.
"""

import numpy as np

from ..exceptions import ArgumentError, SchemaError
from ..tabular import one_hot_encode
from ..validation import ParamsMixin, check_matrix, check_width
from ._tree import TreeArrays, grow_tree, pack_trees, predict_into, presort
from .boosting import GbtClassifier, GbtRegressor, _softmax


def _onehot_targets(codes, n_classes):
    Y = np.zeros((len(codes), n_classes), dtype=np.float64)
    Y[np.arange(len(codes)), codes] = 1.0
    return Y


class RandomForest(ParamsMixin):
    """Bagged trees with sqrt(d) feature subsampling per split.

    Classification trees carry class-distribution leaves (one-hot variance
    splits, i.e. gini); regression trees carry means.
    """

    def __init__(self, task="classification", n_estimators=100, min_samples_leaf=1,
                 random_state=0):
        self.task = task
        self.n_estimators = n_estimators
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def fit(self, X, y):
        X = check_matrix(X)
        n, d = X.shape
        rng = np.random.default_rng(self.random_state)
        if self.task == "classification":
            codes = np.asarray(y, dtype=np.int64)
            self.n_classes_ = int(codes.max()) + 1 if len(codes) else 1
            Y = _onehot_targets(codes, self.n_classes_)
        else:
            Y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1, 1)
            self.n_classes_ = 1
        order = presort(X)
        max_features = max(1, int(round(np.sqrt(d)))) if d else 0
        trees = []
        for t in range(self.n_estimators):
            counts = rng.multinomial(n, np.full(n, 1.0 / n))
            w = counts.astype(np.float64)
            seed = int(rng.integers(0, 2**31 - 1))
            trees.append(
                TreeArrays(*grow_tree(X, order, Y, w, 64, self.min_samples_leaf, max_features, seed))
            )
        self.trees_ = trees
        self.n_features_in_ = d
        self._packed = pack_trees(trees, Y.shape[1])
        return self

    def _mean_response(self, X):
        X = check_matrix(X, allow_empty=True)
        check_width(X, self.n_features_in_)
        q = self.n_classes_ if self.task == "classification" else 1
        out = np.zeros((X.shape[0], q), dtype=np.float64)
        f, t, l, r, v, off = self._packed
        predict_into(f, t, l, r, v, off, X, 1.0 / max(1, self.n_estimators), out)
        return out

    def predict(self, X):
        resp = self._mean_response(X)
        if self.task == "classification":
            return np.argmax(resp, axis=1)
        return resp[:, 0]


class AdaBoostStumps(ParamsMixin):
    """SAMME on depth-1 stumps (multiclass AdaBoost)."""

    def __init__(self, n_estimators=100, random_state=0):
        self.n_estimators = n_estimators
        self.random_state = random_state

    def fit(self, X, y):
        X = check_matrix(X)
        n, d = X.shape
        codes = np.asarray(y, dtype=np.int64)
        n_classes = int(codes.max()) + 1 if len(codes) else 1
        self.n_classes_ = n_classes
        self.n_features_in_ = d
        self.stumps_ = []
        self.alphas_ = []
        if n_classes == 1:
            return self
        Y = _onehot_targets(codes, n_classes)
        order = presort(X)
        w = np.full(n, 1.0 / n)
        for _ in range(self.n_estimators):
            stump = TreeArrays(*grow_tree(X, order, Y, w, 1, 1, 0, -1))
            pred = np.argmax(stump.predict(X), axis=1)
            miss = pred != codes
            err = float(w[miss].sum())
            if err <= 0.0:
                self.stumps_.append(stump)
                self.alphas_.append(1.0)
                break
            if err >= 1.0 - 1.0 / n_classes:
                break
            alpha = np.log((1.0 - err) / err) + np.log(n_classes - 1.0)
            self.stumps_.append(stump)
            self.alphas_.append(alpha)
            w *= np.exp(alpha * miss)
            w /= w.sum()
        return self

    def predict(self, X):
        X = check_matrix(X, allow_empty=True)
        check_width(X, self.n_features_in_)
        scores = np.zeros((X.shape[0], self.n_classes_), dtype=np.float64)
        for stump, alpha in zip(self.stumps_, self.alphas_):
            pred = np.argmax(stump.predict(X), axis=1)
            scores[np.arange(X.shape[0]), pred] += alpha
        return np.argmax(scores, axis=1)


class LogisticRegressionGD(ParamsMixin):
    """Multinomial logistic regression, full-batch gradient descent, L2 1e-4."""

    def __init__(self, l2=1e-4, n_iter=500, random_state=0):
        self.l2 = l2
        self.n_iter = n_iter
        self.random_state = random_state

    def _design(self, X):
        Z = (X - self._mean) / self._scale
        return np.hstack([Z, np.ones((X.shape[0], 1))])

    def fit(self, X, y):
        X = check_matrix(X)
        n, d = X.shape
        codes = np.asarray(y, dtype=np.int64)
        n_classes = int(codes.max()) + 1 if len(codes) else 1
        self.n_classes_ = n_classes
        self.n_features_in_ = d
        self._mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self._scale = scale
        Z = self._design(X)
        self.coef_ = np.zeros((Z.shape[1], n_classes), dtype=np.float64)
        if n_classes == 1:
            return self
        Y = _onehot_targets(codes, n_classes)
        # Lipschitz constant of the softmax loss gradient (power iteration)
        v = np.ones(Z.shape[1]) / np.sqrt(Z.shape[1])
        for _ in range(30):
            v = Z.T @ (Z @ v)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                break
            v /= norm
        lam_max = float(v @ (Z.T @ (Z @ v)))
        lr = 1.0 / (0.25 * lam_max / n + self.l2)
        reg_mask = np.ones((Z.shape[1], 1))
        reg_mask[-1, 0] = 0.0  # bias unregularized
        for _ in range(self.n_iter):
            P = _softmax(Z @ self.coef_)
            grad = Z.T @ (P - Y) / n + self.l2 * reg_mask * self.coef_
            self.coef_ -= lr * grad
        return self

    def predict(self, X):
        X = check_matrix(X, allow_empty=True)
        check_width(X, self.n_features_in_)
        return np.argmax(self._design(X) @ self.coef_, axis=1)


class RidgeRegression(ParamsMixin):
    """Least-squares linear model with L2 1e-4 (closed form, bias unregularized)."""

    def __init__(self, l2=1e-4, random_state=0):
        self.l2 = l2
        self.random_state = random_state

    def fit(self, X, y):
        X = check_matrix(X)
        y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
        self._mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self._scale = scale
        Z = np.hstack([(X - self._mean) / self._scale, np.ones((X.shape[0], 1))])
        reg = self.l2 * np.eye(Z.shape[1])
        reg[-1, -1] = 0.0
        self.coef_ = np.linalg.solve(Z.T @ Z + len(y) * reg, Z.T @ y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = check_matrix(X, allow_empty=True)
        check_width(X, self.n_features_in_)
        Z = np.hstack([(X - self._mean) / self._scale, np.ones((X.shape[0], 1))])
        return Z @ self.coef_


def macro_f1(y_true, y_pred):
    """Macro-averaged F1 over the union of observed true/predicted labels."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    labels = np.union1d(np.unique(y_true), np.unique(y_pred))
    scores = []
    for c in labels:
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return float(np.mean(scores))


def r2_score(y_true, y_pred):
    """Coefficient of determination; 0 when the test target is constant."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def _tree_design(table):
    """Feature matrix for tree learners: codes and raw continuous values."""
    idx = list(table.schema.feature_indices())
    return np.ascontiguousarray(table.values[:, idx])


def _linear_design(table):
    """Feature matrix for the linear learner: one-hot categorical features."""
    features = table.schema.feature_indices()
    blocks = []
    encoded, mapping = one_hot_encode(table)
    for j in features:
        lo, hi = mapping.block(j)
        blocks.append(encoded[:, lo:hi])
    if not blocks:
        return np.empty((table.n_rows, 0))
    return np.hstack(blocks)


def fit_panel(train, task, seed=0):
    """Fit the four panel learners; returns [(name, model, design_fn), ...]."""
    if train.schema.target_column is None:
        raise SchemaError("panel needs a target column")
    if train.n_rows == 0:
        raise ArgumentError("empty training table")
    Xt = _tree_design(train)
    Xl = _linear_design(train)
    if task == "classification":
        y = train.target_codes()
        members = [
            ("gbt", GbtClassifier(random_state=seed).fit(Xt, y), _tree_design),
            ("forest", RandomForest("classification", random_state=seed).fit(Xt, y), _tree_design),
            ("stumps", AdaBoostStumps(random_state=seed).fit(Xt, y), _tree_design),
            ("linear", LogisticRegressionGD(random_state=seed).fit(Xl, y), _linear_design),
        ]
    elif task == "regression":
        y = train.column(train.schema.target_column)
        members = [
            ("gbt", GbtRegressor(random_state=seed).fit(Xt, y), _tree_design),
            ("forest", RandomForest("regression", random_state=seed).fit(Xt, y), _tree_design),
            (
                "stumps",
                GbtRegressor(n_estimators=100, learning_rate=0.1, max_depth=1,
                             random_state=seed).fit(Xt, y),
                _tree_design,
            ),
            ("linear", RidgeRegression(random_state=seed).fit(Xl, y), _linear_design),
        ]
    else:
        raise ArgumentError(f"unknown task {task!r}")
    return members


def evaluate_panel(train, test, task, seed=0, return_details=False):
    """Mean panel score: macro-F1 (classification) or R2 (regression) on `test`."""
    if train.schema.to_dict() != test.schema.to_dict():
        raise SchemaError("train and test schemas differ")
    members = fit_panel(train, task, seed=seed)
    if task == "classification":
        y_true = test.target_codes()
        scorer = macro_f1
    else:
        y_true = test.column(test.schema.target_column)
        scorer = r2_score
    details = {}
    for name, model, design in members:
        details[name] = scorer(y_true, model.predict(design(test)))
    mean = float(np.mean(list(details.values())))
    if return_details:
        return mean, details
    return mean
