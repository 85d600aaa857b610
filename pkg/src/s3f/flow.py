"""Velocity-model bank training: noise pairing, duplication, per-level fits.

Training pairs follow the independent-coupling recipe with a degenerate
conditional path (sigma = 0): x_t = (1 - t) * x0 + t * x1 and the regression
target is x1 - x0, constant across levels for a given pair. Sequential
methods fit one regressor per (continuous feature, level) whose design is
the feature's flowed column next to the previous ordered features; the
heterogeneous variant adds one classifier per categorical feature trained
on the true previous features. The joint baseline fits one regressor per
(one-hot dimension, level) on the full flowed matrix.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArgumentError, FormatError, ModeError, SchemaError, StateError
from .gbt import GbtClassifier, GbtRegressor
from .solver import TimeGrid
from .tabular import DataTable, ScalerState, TableSchema, one_hot_encode, one_hot_map

METHOD_FF = "ff"
METHOD_CS3F = "cs3f"
METHOD_HS3F = "hs3f"
METHODS = (METHOD_FF, METHOD_CS3F, METHOD_HS3F)

CONDITION_NONE = "none"
CONDITION_PER_LABEL = "per_label"

BANK_FORMAT_VERSION = 1

DEFAULT_GBT_PARAMS = {
    "n_estimators": 100,
    "learning_rate": 0.3,
    "max_depth": 6,
    "min_samples_leaf": 1,
    "classifier_n_estimators": 115,
    "classifier_learning_rate": 0.1,
    "classifier_max_depth": 6,
}


def stream(seed, *key):
    """Deterministic child generator for a (seed, path) pair."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class FlowTrainingPlan:
    method: str = METHOD_HS3F
    duplication: int = 100
    grid: TimeGrid = field(default_factory=TimeGrid)
    feature_order: tuple | None = None
    conditioning: str = CONDITION_NONE
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ArgumentError(f"unknown method {self.method!r}")
        if self.conditioning not in (CONDITION_NONE, CONDITION_PER_LABEL):
            raise ArgumentError(f"unknown conditioning {self.conditioning!r}")
        if self.duplication < 1:
            raise ArgumentError("duplication factor must be >= 1")
        if self.sigma != 0.0:
            raise ArgumentError("only the sigma = 0 path family is supported")
        if self.feature_order is not None:
            object.__setattr__(self, "feature_order", tuple(int(i) for i in self.feature_order))

    def resolved_order(self, schema):
        """Generation order over non-target columns; defaults to schema order."""
        base = schema.feature_indices()
        if self.feature_order is None:
            return base
        if sorted(self.feature_order) != sorted(base):
            raise SchemaError(
                f"feature_order {self.feature_order} is not a permutation of feature columns {base}"
            )
        return self.feature_order

    def to_dict(self):
        return {
            "method": self.method,
            "duplication": self.duplication,
            "n_levels": self.grid.n_levels,
            "feature_order": None if self.feature_order is None else list(self.feature_order),
            "conditioning": self.conditioning,
            "sigma": self.sigma,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d):
        return FlowTrainingPlan(
            method=d["method"],
            duplication=d["duplication"],
            grid=TimeGrid(d["n_levels"]),
            feature_order=None if d["feature_order"] is None else tuple(d["feature_order"]),
            conditioning=d["conditioning"],
            sigma=d["sigma"],
            seed=d["seed"],
        )


def _check_scaled(table):
    for j in table.schema.continuous_indices():
        col = table.column(j)
        if col.size and (col.min() < -1e-9 or col.max() > 1.0 + 1e-9):
            raise StateError(
                f"continuous column {table.schema.names[j]!r} is not scaled to [0, 1]"
            )


def generated_columns(schema, plan):
    """Columns the bank generates, in generation order.

    The target column is excluded from the feature order; under
    conditioning 'none' it is generated last, under 'per_label' it is
    attached from the partition label instead.
    """
    order = list(plan.resolved_order(schema))
    if schema.target_column is not None and plan.conditioning == CONDITION_NONE:
        order.append(schema.target_column)
    return tuple(order)


def _project_schema(schema, columns):
    return TableSchema(tuple(schema.columns[j] for j in columns), None)


class FlowTrainingSet:
    """Duplicated rows with shared noise; designs materialized per (slot, time).

    Noise is drawn once per duplicated row and reused across every level, so
    velocity targets are identical at all times for a given pair.
    """

    def __init__(self, table, plan, columns=None):
        _check_scaled(table)
        self.plan = plan
        self.columns = generated_columns(table.schema, plan) if columns is None else tuple(columns)
        kinds = table.schema.kinds
        self.kinds = tuple(kinds[j] for j in self.columns)
        cont_slots = [s for s, k in enumerate(self.kinds) if not k.is_categorical]
        dup = plan.duplication
        if plan.method != METHOD_FF and not cont_slots:
            dup = 1  # all-categorical sequential banks train no regressors
        self.duplication = dup
        base = table.values[:, list(self.columns)]
        self.x1 = np.repeat(base, dup, axis=0)
        self.n_rows = self.x1.shape[0]
        self.noise = {}
        if plan.method == METHOD_FF:
            self.mapping = one_hot_map(_project_schema(table.schema, self.columns))
            encoded, _ = one_hot_encode(
                DataTable(self.mapping.schema, base)
            )
            self.x1_wide = np.repeat(encoded, dup, axis=0)
            rng = stream(plan.seed, 0)
            self.x0_wide = rng.standard_normal(self.x1_wide.shape)
        else:
            for s in cont_slots:
                rng = stream(plan.seed, 0, s)
                self.noise[s] = rng.standard_normal(self.n_rows)

    # sequential designs -------------------------------------------------
    def flow_column(self, slot, t):
        x0 = self.noise[slot]
        return (1.0 - t) * x0 + t * self.x1[:, slot]

    def target(self, slot):
        return self.x1[:, slot] - self.noise[slot]

    def design(self, slot, t):
        return np.ascontiguousarray(
            np.column_stack([self.flow_column(slot, t), self.x1[:, :slot]])
        )

    # joint designs ------------------------------------------------------
    def flow_matrix(self, t):
        return np.ascontiguousarray((1.0 - t) * self.x0_wide + t * self.x1_wide)

    def target_dim(self, dim):
        return self.x1_wide[:, dim] - self.x0_wide[:, dim]


def build_training_set(table, plan):
    """Construct the duplicated, noise-paired training set for a scaled table."""
    return FlowTrainingSet(table, plan)


@dataclass
class ContinuousSlot:
    column: int
    regressors: list

    kind = "continuous"


@dataclass
class CategoricalSlot:
    column: int
    classifier: GbtClassifier | None = None
    frequencies: np.ndarray | None = None

    kind = "categorical"


@dataclass
class SequentialBank:
    slots: list


@dataclass
class JointBank:
    mapping: object
    regressors: list  # [dim][level]


def _regressor_params(gbt_params):
    return {
        "n_estimators": gbt_params["n_estimators"],
        "learning_rate": gbt_params["learning_rate"],
        "max_depth": gbt_params["max_depth"],
        "min_samples_leaf": gbt_params["min_samples_leaf"],
    }


def _classifier_params(gbt_params):
    return {
        "n_estimators": gbt_params["classifier_n_estimators"],
        "learning_rate": gbt_params["classifier_learning_rate"],
        "max_depth": gbt_params["classifier_max_depth"],
    }


def _train_sequential(table, plan, columns, gbt_params):
    training = FlowTrainingSet(table, plan, columns)
    levels = plan.grid.levels
    slots = []
    originals = table.values[:, list(columns)]
    for s, (col, kind) in enumerate(zip(columns, training.kinds)):
        if kind.is_categorical:
            codes = originals[:, s].astype(np.int64)
            if s == 0 and plan.conditioning == CONDITION_NONE:
                freqs = np.bincount(codes, minlength=kind.cardinality).astype(np.float64)
                freqs /= freqs.sum()
                slots.append(CategoricalSlot(col, frequencies=freqs))
            else:
                clf = GbtClassifier(**_classifier_params(gbt_params))
                clf.fit(np.ascontiguousarray(originals[:, :s]), codes, n_classes=kind.cardinality)
                slots.append(CategoricalSlot(col, classifier=clf))
        else:
            target = training.target(s)
            regressors = []
            for t in levels:
                reg = GbtRegressor(**_regressor_params(gbt_params))
                reg.fit(training.design(s, t), target)
                regressors.append(reg)
            slots.append(ContinuousSlot(col, regressors))
    return SequentialBank(slots)


def _train_joint(table, plan, columns, gbt_params):
    training = FlowTrainingSet(table, plan, columns)
    levels = plan.grid.levels
    width = training.x1_wide.shape[1]
    regressors = []
    designs = [training.flow_matrix(t) for t in levels]
    for dim in range(width):
        target = training.target_dim(dim)
        per_level = []
        for design in designs:
            reg = GbtRegressor(**_regressor_params(gbt_params))
            reg.fit(design, target)
            per_level.append(reg)
        regressors.append(per_level)
    return JointBank(training.mapping, regressors)


@dataclass
class VelocityModelBank:
    schema: TableSchema
    plan: FlowTrainingPlan
    scaler: ScalerState
    columns: tuple
    sub_banks: dict
    label_frequencies: np.ndarray | None = None
    gbt_params: dict | None = None
    n_train_rows: int = 0

    @property
    def method(self):
        return self.plan.method

    def regressor_count(self):
        total = 0
        for sub in self.sub_banks.values():
            if isinstance(sub, JointBank):
                total += sum(len(per) for per in sub.regressors)
            else:
                total += sum(
                    len(slot.regressors) for slot in sub.slots if slot.kind == "continuous"
                )
        return total

    def classifier_count(self):
        total = 0
        for sub in self.sub_banks.values():
            if isinstance(sub, SequentialBank):
                total += sum(
                    1
                    for slot in sub.slots
                    if slot.kind == "categorical" and slot.classifier is not None
                )
        return total

    def manifest(self):
        subs = {}
        for key, sub in self.sub_banks.items():
            name = "root" if key is None else f"label_{key}"
            if isinstance(sub, JointBank):
                subs[name] = {
                    "kind": "joint",
                    "width": len(sub.regressors),
                    "n_levels": self.plan.grid.n_levels,
                }
            else:
                slot_meta = []
                for slot in sub.slots:
                    if slot.kind == "continuous":
                        slot_meta.append({"column": slot.column, "model": "regressors"})
                    elif slot.classifier is not None:
                        slot_meta.append({"column": slot.column, "model": "classifier"})
                    else:
                        slot_meta.append(
                            {
                                "column": slot.column,
                                "model": "frequencies",
                                "frequencies": [float(x) for x in slot.frequencies],
                            }
                        )
                subs[name] = {"kind": "sequential", "slots": slot_meta}
        return {
            "format_version": BANK_FORMAT_VERSION,
            "method": self.plan.method,
            "plan": self.plan.to_dict(),
            "schema": self.schema.to_dict(),
            "scaler": self.scaler.to_dict(),
            "columns": list(self.columns),
            "n_train_rows": self.n_train_rows,
            "label_frequencies": (
                None
                if self.label_frequencies is None
                else [float(x) for x in self.label_frequencies]
            ),
            "sub_banks": subs,
        }

    def manifest_bytes(self):
        return json.dumps(self.manifest(), sort_keys=True, indent=1).encode("utf-8")

    @property
    def bank_id(self):
        return hashlib.sha256(self.manifest_bytes()).hexdigest()[:16]


def train_bank(table, plan, gbt_params=None, scaler=None):
    """Train the velocity model bank for a scaled table.

    Under per-label conditioning the table is partitioned by target label
    and an independent sub-bank is trained per label; empirical label
    frequencies drive generation counts.
    """
    _check_scaled(table)
    params = dict(DEFAULT_GBT_PARAMS)
    if gbt_params:
        unknown = set(gbt_params) - set(DEFAULT_GBT_PARAMS)
        if unknown:
            raise ArgumentError(f"unknown gbt parameters: {sorted(unknown)}")
        params.update(gbt_params)
    if scaler is None:
        scaler = ScalerState(table.schema.continuous_indices(),
                             np.zeros(len(table.schema.continuous_indices())),
                             np.ones(len(table.schema.continuous_indices())))
    columns = generated_columns(table.schema, plan)
    kinds = [table.schema.kind_of(j) for j in columns]
    if plan.method == METHOD_CS3F and any(k.is_categorical for k in kinds):
        raise ModeError("cs3f handles continuous features only; use hs3f for mixed tables")

    train_one = _train_joint if plan.method == METHOD_FF else _train_sequential

    if plan.conditioning == CONDITION_PER_LABEL:
        if table.schema.target_column is None or not table.schema.target_kind.is_categorical:
            raise ArgumentError("per-label conditioning needs a categorical target column")
        codes = table.target_codes()
        cardinality = table.schema.target_kind.cardinality
        counts = np.bincount(codes, minlength=cardinality).astype(np.float64)
        freqs = counts / counts.sum()
        sub_banks = {}
        for label in range(cardinality):
            rows = np.flatnonzero(codes == label)
            if len(rows) == 0:
                continue
            part = table.take(rows)
            label_plan = FlowTrainingPlan(
                method=plan.method,
                duplication=plan.duplication,
                grid=plan.grid,
                feature_order=plan.feature_order,
                conditioning=plan.conditioning,
                sigma=plan.sigma,
                seed=int(stream(plan.seed, 7, label).integers(0, 2**31 - 1)),
            )
            sub_banks[label] = train_one(part, label_plan, columns, params)
        return VelocityModelBank(
            table.schema, plan, scaler, columns, sub_banks, freqs, params, table.n_rows
        )

    sub = train_one(table, plan, columns, params)
    return VelocityModelBank(
        table.schema, plan, scaler, columns, {None: sub}, None, params, table.n_rows
    )


# persistence ------------------------------------------------------------


def _sub_dir(base, key):
    return base if key is None else os.path.join(base, f"label_{key}")


def save_bank(bank, directory):
    """Write manifest.json plus one JSON file per model under `directory`."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "manifest.json"), "wb") as fh:
        fh.write(bank.manifest_bytes())
    for key, sub in bank.sub_banks.items():
        sub_dir = _sub_dir(directory, key)
        os.makedirs(sub_dir, exist_ok=True)
        if isinstance(sub, JointBank):
            for dim, per_level in enumerate(sub.regressors):
                for i, reg in enumerate(per_level):
                    with open(os.path.join(sub_dir, f"f{dim}_t{i}.json"), "w") as fh:
                        fh.write(reg.to_json())
        else:
            for s, slot in enumerate(sub.slots):
                if slot.kind == "continuous":
                    for i, reg in enumerate(slot.regressors):
                        with open(os.path.join(sub_dir, f"f{s}_t{i}.json"), "w") as fh:
                            fh.write(reg.to_json())
                elif slot.classifier is not None:
                    with open(os.path.join(sub_dir, f"c{s}.json"), "w") as fh:
                        fh.write(slot.classifier.to_json())
    return directory


def _load_model_json(path):
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise FormatError(f"missing model file {path}") from exc
    except (json.JSONDecodeError, OSError) as exc:
        raise FormatError(f"corrupt model file {path}: {exc}") from exc


def load_bank(directory):
    """Inverse of save_bank; loaded predictions are bit-identical."""
    manifest_path = os.path.join(directory, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise FormatError(f"no bank manifest in {directory!r}")
    try:
        with open(manifest_path, "r") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt manifest: {exc}") from exc
    if manifest.get("format_version") != BANK_FORMAT_VERSION:
        raise FormatError(f"unsupported bank format version {manifest.get('format_version')!r}")
    if manifest.get("method") not in METHODS:
        raise FormatError(f"unknown method tag {manifest.get('method')!r}")
    try:
        plan = FlowTrainingPlan.from_dict(manifest["plan"])
        schema = TableSchema.from_dict(manifest["schema"])
        scaler = ScalerState.from_dict(manifest["scaler"])
        columns = tuple(manifest["columns"])
        n_levels = plan.grid.n_levels
        sub_banks = {}
        for name, meta in manifest["sub_banks"].items():
            key = None if name == "root" else int(name.split("_", 1)[1])
            sub_dir = _sub_dir(directory, key)
            if meta["kind"] == "joint":
                regressors = []
                for dim in range(meta["width"]):
                    per_level = [
                        GbtRegressor.from_dict(
                            _load_model_json(os.path.join(sub_dir, f"f{dim}_t{i}.json"))
                        )
                        for i in range(n_levels)
                    ]
                    regressors.append(per_level)
                sub_banks[key] = JointBank(one_hot_map(_project_schema(schema, columns)), regressors)
            else:
                slots = []
                for s, slot_meta in enumerate(meta["slots"]):
                    col = int(slot_meta["column"])
                    if slot_meta["model"] == "regressors":
                        regs = [
                            GbtRegressor.from_dict(
                                _load_model_json(os.path.join(sub_dir, f"f{s}_t{i}.json"))
                            )
                            for i in range(n_levels)
                        ]
                        slots.append(ContinuousSlot(col, regs))
                    elif slot_meta["model"] == "classifier":
                        clf = GbtClassifier.from_dict(
                            _load_model_json(os.path.join(sub_dir, f"c{s}.json"))
                        )
                        slots.append(CategoricalSlot(col, classifier=clf))
                    else:
                        freqs = np.asarray(slot_meta["frequencies"], dtype=np.float64)
                        slots.append(CategoricalSlot(col, frequencies=freqs))
                sub_banks[key] = SequentialBank(slots)
        label_freqs = manifest["label_frequencies"]
        if label_freqs is not None:
            label_freqs = np.asarray(label_freqs, dtype=np.float64)
        return VelocityModelBank(
            schema, plan, scaler, columns, sub_banks, label_freqs,
            n_train_rows=int(manifest.get("n_train_rows", 0)),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"malformed bank manifest: {exc}") from exc
