"""Evaluation harness: exact Wasserstein-1 (L1 cost), coverage, efficacy.

Distances run on the evaluation representation: continuous columns min-max
scaled with the real-train scaler, categorical columns one-hot encoded, so a
categorical disagreement costs 2 per feature under L1 and distances are
invariant to level relabeling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._ot import l1_cost_matrix, transport_cost
from .exceptions import ArgumentError, NumericError, SchemaError, SizeError
from .gbt.panel import evaluate_panel
from .tabular import DataTable, one_hot_encode
from .validation import check_matrix

OT_MAX_POINTS = 1000
COVERAGE_K = 5

REPORT_COLUMNS = (
    "dataset",
    "method",
    "solver",
    "W_tr",
    "W_te",
    "coverage_tr",
    "coverage_te",
    "score_fake",
    "score_comb",
    "seconds",
)


def wasserstein1(A, B, max_points=OT_MAX_POINTS):
    """Exact 1-Wasserstein distance between uniform empirical measures, L1 ground cost."""
    A = check_matrix(A, "A")
    B = check_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise SchemaError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if max_points is not None and max(A.shape[0], B.shape[0]) > max_points:
        raise SizeError(
            f"sides of size {A.shape[0]}/{B.shape[0]} exceed max_points={max_points}; subsample first"
        )
    # canonical orientation makes wasserstein1(A, B) == wasserstein1(B, A) structurally
    if A.shape[0] > B.shape[0] or (A.shape[0] == B.shape[0] and A.tobytes() > B.tobytes()):
        A, B = B, A
    m, p = A.shape[0], B.shape[0]
    C = l1_cost_matrix(A, B)
    supplies = np.full(m, 1.0 / m)
    demands = np.full(p, 1.0 / p)
    cost = transport_cost(C, supplies, demands)
    if cost < 0.0:
        raise NumericError("transportation solver failed to converge")
    return float(cost)


def _pairwise_l2(A, B):
    sq = np.maximum(
        (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * (A @ B.T), 0.0
    )
    return np.sqrt(sq)


def coverage(real, fake, k=COVERAGE_K):
    """Fraction of real points with a fake point inside their k-NN radius.

    The radius of a real point is the L2 distance to its k-th nearest other
    real point; a point is covered when some fake point lies within it.
    """
    real = check_matrix(real, "real")
    fake = check_matrix(fake, "fake")
    if real.shape[1] != fake.shape[1]:
        raise SchemaError(f"dimension mismatch: {real.shape[1]} vs {fake.shape[1]}")
    m = real.shape[0]
    if m <= k:
        raise ArgumentError(f"need more than k={k} real points, got {m}")
    d_rr = _pairwise_l2(real, real)
    np.fill_diagonal(d_rr, np.inf)
    radii = np.partition(d_rr, k - 1, axis=1)[:, k - 1]
    nearest_fake = _pairwise_l2(real, fake).min(axis=1)
    return float(np.mean(nearest_fake <= radii))


def augment(real_train, fake_train):
    """Row-concatenate real and fake training tables."""
    if real_train.schema.to_dict() != fake_train.schema.to_dict():
        raise SchemaError("real and fake schemas differ")
    return DataTable(real_train.schema, np.vstack([real_train.values, fake_train.values]))


def efficacy(fake_train, aug_train, real_train, real_test, task, seed=0):
    """Panel scores for models trained on fake and on augmented data, tested on real."""
    for name, t in (("fake_train", fake_train), ("aug_train", aug_train), ("real_test", real_test)):
        if t.schema.to_dict() != real_train.schema.to_dict():
            raise SchemaError(f"{name} schema differs from real_train")
    score_fake = evaluate_panel(fake_train, real_test, task, seed=seed)
    score_comb = evaluate_panel(aug_train, real_test, task, seed=seed)
    return score_fake, score_comb


def evaluation_representation(table, scaler_state):
    """Scaled + one-hot matrix used for OT and coverage."""
    values = np.array(table.values)
    for slot, j in enumerate(scaler_state.columns):
        lo, hi = scaler_state.mins[slot], scaler_state.maxs[slot]
        span = hi - lo
        values[:, j] = (values[:, j] - lo) / span if span > 0 else 0.0
    encoded, _ = one_hot_encode(table.with_values(values))
    return encoded


def _subsample(M, limit, rng):
    if M.shape[0] <= limit:
        return M
    idx = rng.choice(M.shape[0], size=limit, replace=False)
    return M[np.sort(idx)]


@dataclass
class MetricsReport:
    dataset: str
    method: str
    solver: str
    W_tr: float
    W_te: float
    coverage_tr: float
    coverage_te: float
    score_fake: float
    score_comb: float
    seconds: float
    task: str = ""

    def __post_init__(self):
        if self.W_tr < 0 or self.W_te < 0:
            raise ArgumentError("Wasserstein distances must be non-negative")
        if not (0.0 <= self.coverage_tr <= 1.0 and 0.0 <= self.coverage_te <= 1.0):
            raise ArgumentError("coverage must lie in [0, 1]")
        if self.seconds < 0:
            raise ArgumentError("seconds must be non-negative")

    def to_dict(self):
        d = {col: getattr(self, col) for col in REPORT_COLUMNS}
        d["task"] = self.task
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    def csv_row(self):
        cells = []
        for col in REPORT_COLUMNS:
            v = getattr(self, col)
            cells.append(repr(float(v)) if isinstance(v, float) else str(v))
        return ",".join(cells)

    @staticmethod
    def csv_header():
        return ",".join(REPORT_COLUMNS)


def full_report(
    real_train,
    real_test,
    fake,
    task,
    seconds,
    scaler_state=None,
    dataset="",
    method="",
    solver="",
    k=COVERAGE_K,
    ot_max_points=OT_MAX_POINTS,
    seed=0,
):
    """Assemble the full metric panel for one generated table."""
    if scaler_state is None:
        from .tabular import minmax_fit_transform

        _, scaler_state = minmax_fit_transform(real_train)
    rep_train = evaluation_representation(real_train, scaler_state)
    rep_test = evaluation_representation(real_test, scaler_state)
    rep_fake = evaluation_representation(fake, scaler_state)

    rng = np.random.default_rng(seed)
    sub_fake_tr = _subsample(rep_fake, ot_max_points, rng)
    sub_train = _subsample(rep_train, ot_max_points, rng)
    sub_fake_te = _subsample(rep_fake, ot_max_points, rng)
    sub_test = _subsample(rep_test, ot_max_points, rng)

    w_tr = wasserstein1(sub_fake_tr, sub_train, max_points=ot_max_points)
    w_te = wasserstein1(sub_fake_te, sub_test, max_points=ot_max_points)
    cov_tr = coverage(rep_train, rep_fake, k=k)
    cov_te = coverage(rep_test, rep_fake, k=k)
    score_fake, score_comb = efficacy(
        fake, augment(real_train, fake), real_train, real_test, task, seed=seed
    )
    return MetricsReport(
        dataset=dataset,
        method=method,
        solver=solver,
        W_tr=w_tr,
        W_te=w_te,
        coverage_tr=cov_tr,
        coverage_te=cov_te,
        score_fake=score_fake,
        score_comb=score_comb,
        seconds=seconds,
        task=task,
    )
