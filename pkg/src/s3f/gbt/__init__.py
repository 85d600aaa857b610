from .boosting import (
    GbtClassifier,
    GbtRegressor,
    fit_classifier,
    fit_regressor,
    predict_proba,
    predict_regressor,
)
from .panel import (
    AdaBoostStumps,
    LogisticRegressionGD,
    RandomForest,
    RidgeRegression,
    evaluate_panel,
    fit_panel,
    macro_f1,
    r2_score,
)

__all__ = [
    "GbtClassifier",
    "GbtRegressor",
    "fit_classifier",
    "fit_regressor",
    "predict_proba",
    "predict_regressor",
    "AdaBoostStumps",
    "LogisticRegressionGD",
    "RandomForest",
    "RidgeRegression",
    "evaluate_panel",
    "fit_panel",
    "macro_f1",
    "r2_score",
]
