"""Fixed-step integration of the flow ODE over the training time grid.

A velocity field is any callable (t, X) -> V with V shaped like X. Fields
backed by per-level models wrap their level lookup in LevelResolvedField,
which maps a continuous query time to the nearest trained level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArgumentError, NumericError

EULER = "euler"
RK4 = "rk4"


@dataclass(frozen=True)
class TimeGrid:
    """n_levels evenly spaced times t_i = i / n_levels, i = 0..n_levels-1."""

    n_levels: int = 50

    def __post_init__(self):
        if self.n_levels < 1:
            raise ArgumentError("need at least one noise level")

    @property
    def step(self):
        return 1.0 / self.n_levels

    @property
    def levels(self):
        return np.arange(self.n_levels) / self.n_levels


@dataclass(frozen=True)
class SolverConfig:
    kind: str = EULER
    grid: TimeGrid = field(default_factory=TimeGrid)

    def __post_init__(self):
        if self.kind not in (EULER, RK4):
            raise ArgumentError(f"unknown solver kind {self.kind!r}")


class LevelResolvedField:
    """Velocity field backed by one model per level.

    Continuous-time queries resolve to level index round(t * n_levels),
    clamped into [0, n_levels - 1]; `query(level, X)` does the model call.
    """

    def __init__(self, n_levels, query):
        self.n_levels = n_levels
        self.query = query

    def level_of(self, t):
        idx = int(round(t * self.n_levels))
        return min(max(idx, 0), self.n_levels - 1)

    def __call__(self, t, X):
        return self.query(self.level_of(t), X)


def _check_state(x, step_index):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite state after step {step_index}", step=step_index)


def integrate(velocity_field, x_init, config):
    """Advance x from t=0 to t=1 in n_levels fixed steps (Euler or classical RK4)."""
    x = np.asarray(x_init, dtype=np.float64).copy()
    if x.size and not np.all(np.isfinite(x)):
        raise NumericError("non-finite initial state", step=-1)
    if x.size == 0:
        return x
    grid = config.grid
    h = grid.step
    for i in range(grid.n_levels):
        t = i * h
        if config.kind == EULER:
            x = x + h * np.asarray(velocity_field(t, x))
        else:
            k1 = np.asarray(velocity_field(t, x))
            k2 = np.asarray(velocity_field(t + h / 2.0, x + (h / 2.0) * k1))
            k3 = np.asarray(velocity_field(t + h / 2.0, x + (h / 2.0) * k2))
            k4 = np.asarray(velocity_field(t + h, x + h * k3))
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_state(x, i)
    return x


def integrate_batch(velocity_field, X_init, config):
    """Row-wise batched integrate: X_init is (rows, state_dim)."""
    X_init = np.asarray(X_init, dtype=np.float64)
    if X_init.ndim != 2:
        raise ArgumentError(f"integrate_batch expects a 2-D matrix, got shape {X_init.shape}")
    return integrate(velocity_field, X_init, config)
