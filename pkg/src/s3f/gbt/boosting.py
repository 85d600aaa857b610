"""Gradient-boosted trees: squared-error regressor and softmax classifier.

Both are first-order boosters over exact-greedy trees: each round fits the
current residuals (or per-class probability residuals) and the ensemble
prediction is base_score + learning_rate * sum of tree outputs.
"""

import json

import numpy as np

from ..exceptions import ArgumentError, FormatError
from ..validation import ParamsMixin, check_codes, check_matrix, check_width
from ._tree import TreeArrays, grow_tree, pack_trees, predict_into, presort

FORMAT_VERSION = 1


def _ones(n):
    return np.ones(n, dtype=np.float64)


class GbtRegressor(ParamsMixin):
    """Least-squares gradient boosting with exact greedy splits.

    Defaults follow the conventional boosted-tree regressor settings:
    100 trees, learning rate 0.3, depth 6.
    """

    def __init__(self, n_estimators=100, learning_rate=0.3, max_depth=6,
                 min_samples_leaf=1, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def _validate(self):
        if self.n_estimators < 0:
            raise ArgumentError("n_estimators must be >= 0")
        if self.max_depth < 1:
            raise ArgumentError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ArgumentError("min_samples_leaf must be >= 1")
        if not 0 < self.learning_rate <= 2.0:
            raise ArgumentError("learning_rate must lie in (0, 2]")

    def fit(self, X, y, sample_order=None):
        """Fit on X (n, d), y (n,). `sample_order` lets callers reuse a presort."""
        self._validate()
        X = check_matrix(X)
        n, d = X.shape
        y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
        if y.shape[0] != n:
            raise ArgumentError(f"y has {y.shape[0]} entries for {n} rows")
        if not np.all(np.isfinite(y)):
            from ..exceptions import NumericError

            raise NumericError("y contains non-finite values")
        order = presort(X) if sample_order is None else sample_order
        w = _ones(n)
        self.base_score_ = float(y.mean())
        residual = y - self.base_score_
        target = np.empty((n, 1), dtype=np.float64)
        trees = []
        losses = [float(np.mean(residual**2))]
        for _ in range(self.n_estimators):
            target[:, 0] = residual
            tree = TreeArrays(
                *grow_tree(X, order, target, w, self.max_depth, self.min_samples_leaf, 0, -1)
            )
            residual -= self.learning_rate * tree.predict(X)[:, 0]
            trees.append(tree)
            losses.append(float(np.mean(residual**2)))
        self.trees_ = trees
        self.train_losses_ = losses
        self.n_features_in_ = d
        self._packed = pack_trees(trees, 1)
        return self

    def predict(self, X):
        X = check_matrix(X, allow_empty=True)
        check_width(X, self.n_features_in_)
        out = np.full((X.shape[0], 1), self.base_score_, dtype=np.float64)
        f, t, l, r, v, off = self._packed
        predict_into(f, t, l, r, v, off, X, self.learning_rate, out)
        return out[:, 0]

    def to_dict(self):
        return {
            "kind": "gbt_regressor",
            "version": FORMAT_VERSION,
            "params": self.get_params(),
            "base_score": self.base_score_,
            "n_features": self.n_features_in_,
            "trees": [tree.to_nodes() for tree in self.trees_],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") != "gbt_regressor":
            raise FormatError(f"not a regressor payload: {d.get('kind')!r}")
        if d.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported regressor format version {d.get('version')!r}")
        model = cls(**d["params"])
        model.base_score_ = float(d["base_score"])
        model.n_features_in_ = int(d["n_features"])
        model.trees_ = [TreeArrays.from_nodes(nodes, 1) for nodes in d["trees"]]
        model.train_losses_ = []
        model._packed = pack_trees(model.trees_, 1)
        return model


def _softmax(F):
    Z = F - F.max(axis=1, keepdims=True)
    np.exp(Z, out=Z)
    Z /= Z.sum(axis=1, keepdims=True)
    return Z


class GbtClassifier(ParamsMixin):
    """One-vs-all softmax gradient boosting.

    `n_estimators` counts boosting rounds; each round grows one tree per
    class on the probability residuals. Paper-default 115 rounds at
    learning rate 0.1.
    """

    def __init__(self, n_estimators=115, learning_rate=0.1, max_depth=6,
                 min_samples_leaf=1, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def fit(self, X, y, n_classes=None):
        if self.n_estimators < 0:
            raise ArgumentError("n_estimators must be >= 0")
        X = check_matrix(X)
        n, d = X.shape
        y = np.asarray(y)
        if y.shape[0] != n:
            raise ArgumentError(f"y has {y.shape[0]} entries for {n} rows")
        if y.size == 0:
            raise ArgumentError("empty class set")
        if n_classes is None:
            n_classes = int(np.max(y)) + 1
        if n_classes < 1:
            raise ArgumentError("need at least one class")
        codes = check_codes(y, n_classes)
        self.n_classes_ = n_classes
        self.n_features_in_ = d
        self.trees_ = [[] for _ in range(n_classes)]
        self.train_losses_ = []
        if n_classes == 1:
            self._packed = None
            return self

        onehot = np.zeros((n, n_classes), dtype=np.float64)
        onehot[np.arange(n), codes] = 1.0
        order = presort(X)
        w = _ones(n)
        F = np.zeros((n, n_classes), dtype=np.float64)
        target = np.empty((n, 1), dtype=np.float64)
        proba = _softmax(F)
        self.train_losses_.append(self._log_loss(proba, codes))
        for _ in range(self.n_estimators):
            grad = onehot - proba
            for c in range(n_classes):
                target[:, 0] = grad[:, c]
                tree = TreeArrays(
                    *grow_tree(X, order, target, w, self.max_depth, self.min_samples_leaf, 0, -1)
                )
                F[:, c] += self.learning_rate * tree.predict(X)[:, 0]
                self.trees_[c].append(tree)
            proba = _softmax(F)
            self.train_losses_.append(self._log_loss(proba, codes))
        self._packed = [pack_trees(trees, 1) for trees in self.trees_]
        return self

    @staticmethod
    def _log_loss(proba, codes):
        p = np.clip(proba[np.arange(len(codes)), codes], 1e-15, None)
        return float(-np.mean(np.log(p)))

    def decision_function(self, X):
        X = check_matrix(X, allow_empty=True)
        check_width(X, self.n_features_in_)
        F = np.zeros((X.shape[0], self.n_classes_), dtype=np.float64)
        if self.n_classes_ == 1:
            return F
        col = np.zeros((X.shape[0], 1), dtype=np.float64)
        for c, packed in enumerate(self._packed):
            col[:] = 0.0
            f, t, l, r, v, off = packed
            predict_into(f, t, l, r, v, off, X, self.learning_rate, col)
            F[:, c] = col[:, 0]
        return F

    def predict_proba(self, X):
        if self.n_classes_ == 1:
            X = check_matrix(X, allow_empty=True)
            check_width(X, self.n_features_in_)
            return np.ones((X.shape[0], 1), dtype=np.float64)
        return _softmax(self.decision_function(X))

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {
            "kind": "gbt_classifier",
            "version": FORMAT_VERSION,
            "params": self.get_params(),
            "n_classes": self.n_classes_,
            "n_features": self.n_features_in_,
            "trees": [[tree.to_nodes() for tree in per_class] for per_class in self.trees_],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") != "gbt_classifier":
            raise FormatError(f"not a classifier payload: {d.get('kind')!r}")
        if d.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported classifier format version {d.get('version')!r}")
        model = cls(**d["params"])
        model.n_classes_ = int(d["n_classes"])
        model.n_features_in_ = int(d["n_features"])
        model.trees_ = [
            [TreeArrays.from_nodes(nodes, 1) for nodes in per_class] for per_class in d["trees"]
        ]
        model.train_losses_ = []
        model._packed = (
            None if model.n_classes_ == 1 else [pack_trees(trees, 1) for trees in model.trees_]
        )
        return model


def fit_regressor(X, y, **params):
    return GbtRegressor(**params).fit(X, y)


def predict_regressor(model, X):
    return model.predict(X)


def fit_classifier(X, y, n_classes=None, **params):
    return GbtClassifier(**params).fit(X, y, n_classes=n_classes)


def predict_proba(model, X):
    return model.predict_proba(X)
