"""Top-level estimator tying scaling, bank training, and sampling together."""

from __future__ import annotations

import time

from .exceptions import ArgumentError, StateError
from .flow import (
    CONDITION_NONE,
    CONDITION_PER_LABEL,
    FlowTrainingPlan,
    train_bank,
)
from .solver import EULER, RK4, SolverConfig, TimeGrid
from .tabular import minmax_fit_transform
from .generate import GenerationRequest, generate
from .validation import ParamsMixin


class FlowSynthesizer(ParamsMixin):
    """fit() a mixed-type table, then sample() synthetic rows from it.

    Paper-protocol defaults: rows duplicated 100 times, 50 noise levels,
    classifier with 115 rounds at learning rate 0.1, per-label conditioning
    when the table has a categorical target.
    """

    def __init__(
        self,
        method="hs3f",
        solver=EULER,
        n_noise_levels=50,
        duplication=100,
        conditioning="auto",
        feature_order=None,
        n_estimators=100,
        learning_rate=0.3,
        max_depth=6,
        min_samples_leaf=1,
        classifier_n_estimators=115,
        classifier_learning_rate=0.1,
        classifier_max_depth=6,
        random_state=0,
    ):
        self.method = method
        self.solver = solver
        self.n_noise_levels = n_noise_levels
        self.duplication = duplication
        self.conditioning = conditioning
        self.feature_order = feature_order
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.classifier_n_estimators = classifier_n_estimators
        self.classifier_learning_rate = classifier_learning_rate
        self.classifier_max_depth = classifier_max_depth
        self.random_state = random_state

    def _resolve_conditioning(self, schema):
        if self.conditioning != "auto":
            return self.conditioning
        if schema.target_column is not None and schema.target_kind.is_categorical:
            return CONDITION_PER_LABEL
        return CONDITION_NONE

    def fit(self, table):
        if self.solver not in (EULER, RK4):
            raise ArgumentError(f"unknown solver {self.solver!r}")
        started = time.perf_counter()
        scaled, scaler = minmax_fit_transform(table)
        plan = FlowTrainingPlan(
            method=self.method,
            duplication=self.duplication,
            grid=TimeGrid(self.n_noise_levels),
            feature_order=self.feature_order,
            conditioning=self._resolve_conditioning(table.schema),
            seed=self.random_state,
        )
        gbt_params = {
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "classifier_n_estimators": self.classifier_n_estimators,
            "classifier_learning_rate": self.classifier_learning_rate,
            "classifier_max_depth": self.classifier_max_depth,
        }
        self.bank_ = train_bank(scaled, plan, gbt_params, scaler)
        self.n_train_rows_ = table.n_rows
        self.fit_seconds_ = time.perf_counter() - started
        return self

    def sample(self, n_samples=None, seed=0, init_mu=0.0, init_sigma=1.0):
        """Generate rows; defaults to the training-set size for size-matched comparisons."""
        if not hasattr(self, "bank_"):
            raise StateError("synthesizer is not fitted")
        if n_samples is None:
            n_samples = self.n_train_rows_
        req = GenerationRequest(
            method=self.method,
            solver=SolverConfig(self.solver, self.bank_.plan.grid),
            n_samples=n_samples,
            seed=seed,
            init_mu=init_mu,
            init_sigma=init_sigma,
        )
        return generate(self.bank_, req)
