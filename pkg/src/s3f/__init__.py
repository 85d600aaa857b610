"""Sequential feature forest flow: tabular synthetic data with boosted trees.

Three generators share one bank/solver machinery: a joint flow-matching
baseline over one-hot features (ff), a per-feature sequential flow for
continuous data (cs3f), and the mixed variant that samples categorical
features from classifier probabilities (hs3f). Euler and RK4 solvers
integrate the learned velocity fields; the metrics module scores generated
tables with exact Wasserstein-1, coverage, and downstream efficacy.
"""

from .exceptions import (
    ArgumentError,
    FormatError,
    IngestError,
    ModeError,
    NumericError,
    S3FError,
    SchemaError,
    SizeError,
    StateError,
)
from .flow import (
    FlowTrainingPlan,
    VelocityModelBank,
    build_training_set,
    load_bank,
    save_bank,
    train_bank,
)
from .gbt import GbtClassifier, GbtRegressor, evaluate_panel
from .generate import GeneratedTable, GenerationRequest, generate, run_sensitivity
from .metrics import MetricsReport, coverage, efficacy, full_report, wasserstein1
from .solver import LevelResolvedField, SolverConfig, TimeGrid, integrate, integrate_batch
from .synthesizer import FlowSynthesizer
from .tabular import (
    ColumnKind,
    DataTable,
    ScalerState,
    TableSchema,
    load_csv,
    minmax_fit_transform,
    minmax_inverse_clip,
    one_hot_decode,
    one_hot_encode,
    split,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "ColumnKind",
    "DataTable",
    "FlowSynthesizer",
    "FlowTrainingPlan",
    "FormatError",
    "GbtClassifier",
    "GbtRegressor",
    "GeneratedTable",
    "GenerationRequest",
    "IngestError",
    "LevelResolvedField",
    "MetricsReport",
    "ModeError",
    "NumericError",
    "S3FError",
    "ScalerState",
    "SchemaError",
    "SizeError",
    "SolverConfig",
    "StateError",
    "TableSchema",
    "TimeGrid",
    "VelocityModelBank",
    "build_training_set",
    "coverage",
    "efficacy",
    "evaluate_panel",
    "full_report",
    "generate",
    "integrate",
    "integrate_batch",
    "load_bank",
    "load_csv",
    "minmax_fit_transform",
    "minmax_inverse_clip",
    "one_hot_decode",
    "one_hot_encode",
    "run_sensitivity",
    "save_bank",
    "split",
    "train_bank",
    "wasserstein1",
]
