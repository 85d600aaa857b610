"""Column-typed tabular data: ingestion, scaling, encoding, splitting.

Tables hold a float64 cell matrix; categorical cells carry dense integer
codes (first-appearance order) and keep their original labels on the schema
for decoding. All objects are immutable after construction.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArgumentError, IngestError, SchemaError, StateError

CATEGORICAL_THRESHOLD = 20

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ColumnKind:
    """Continuous column, or categorical with labels coded 0..cardinality-1."""

    kind: str
    levels: tuple = ()

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise ArgumentError(f"unknown column kind {self.kind!r}")
        if self.kind == CATEGORICAL and len(self.levels) < 1:
            raise ArgumentError("categorical column needs at least one level")

    @property
    def is_categorical(self):
        return self.kind == CATEGORICAL

    @property
    def cardinality(self):
        if not self.is_categorical:
            raise StateError("continuous columns have no cardinality")
        return len(self.levels)

    @staticmethod
    def continuous():
        return ColumnKind(CONTINUOUS)

    @staticmethod
    def categorical(levels):
        return ColumnKind(CATEGORICAL, tuple(levels))


@dataclass(frozen=True)
class TableSchema:
    columns: tuple  # of (name, ColumnKind)
    target_column: int | None = None

    def __post_init__(self):
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if self.target_column is not None and not (0 <= self.target_column < len(self.columns)):
            raise SchemaError(f"target index {self.target_column} out of range")

    @property
    def n_columns(self):
        return len(self.columns)

    @property
    def names(self):
        return tuple(name for name, _ in self.columns)

    @property
    def kinds(self):
        return tuple(kind for _, kind in self.columns)

    @property
    def target_kind(self):
        if self.target_column is None:
            return None
        return self.columns[self.target_column][1]

    def kind_of(self, index):
        return self.columns[index][1]

    def feature_indices(self):
        """Column indices excluding the target (generation order domain)."""
        return tuple(i for i in range(self.n_columns) if i != self.target_column)

    def continuous_indices(self):
        return tuple(i for i, (_, k) in enumerate(self.columns) if not k.is_categorical)

    def categorical_indices(self):
        return tuple(i for i, (_, k) in enumerate(self.columns) if k.is_categorical)

    def to_dict(self):
        cols = []
        for name, kind in self.columns:
            if kind.is_categorical:
                cols.append({"name": name, "kind": CATEGORICAL, "levels": list(kind.levels)})
            else:
                cols.append({"name": name, "kind": CONTINUOUS})
        return {"columns": cols, "target_column": self.target_column}

    @staticmethod
    def from_dict(d):
        cols = []
        for c in d["columns"]:
            if c["kind"] == CATEGORICAL:
                cols.append((c["name"], ColumnKind.categorical(c["levels"])))
            else:
                cols.append((c["name"], ColumnKind.continuous()))
        return TableSchema(tuple(cols), d.get("target_column"))


@dataclass(frozen=True)
class DataTable:
    schema: TableSchema
    values: np.ndarray  # (n, K) float64; categorical cells hold integer codes

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != self.schema.n_columns:
            raise SchemaError(
                f"value matrix {values.shape} does not match schema width {self.schema.n_columns}"
            )
        if values.size and not np.all(np.isfinite(values)):
            raise IngestError("table contains non-finite cells")
        for j, (name, kind) in enumerate(self.schema.columns):
            if kind.is_categorical and values.shape[0]:
                col = values[:, j]
                if np.any(col != np.round(col)) or col.min() < 0 or col.max() >= kind.cardinality:
                    raise SchemaError(f"column {name!r} has codes outside [0, {kind.cardinality})")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self):
        return self.values.shape[0]

    def column(self, index):
        return self.values[:, index]

    def with_values(self, values):
        return DataTable(self.schema, values)

    def take(self, row_indices):
        return DataTable(self.schema, self.values[np.asarray(row_indices, dtype=np.intp)])

    def target_codes(self):
        if self.schema.target_column is None:
            raise StateError("table has no target column")
        return self.values[:, self.schema.target_column].astype(np.int64)


@dataclass(frozen=True)
class ScalerState:
    """Per-continuous-column (min, max) from the fitted table."""

    columns: tuple  # continuous column indices
    mins: np.ndarray
    maxs: np.ndarray
    scaled: bool = field(default=True)

    def to_dict(self):
        return {
            "columns": list(self.columns),
            "mins": [float(v) for v in self.mins],
            "maxs": [float(v) for v in self.maxs],
        }

    @staticmethod
    def from_dict(d):
        return ScalerState(
            tuple(d["columns"]),
            np.asarray(d["mins"], dtype=np.float64),
            np.asarray(d["maxs"], dtype=np.float64),
        )


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return None


def _read_rows(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise IngestError(f"{path}: need a header row and at least one data row")
    header, data = rows[0], rows[1:]
    width = len(header)
    for i, row in enumerate(data):
        if len(row) != width:
            raise IngestError(f"{path}: row {i + 2} has {len(row)} cells, expected {width}")
        for cell in row:
            if cell.strip() == "":
                raise IngestError(f"{path}: missing cell in row {i + 2}")
    return header, data


def load_csv(path, schema_override=None, categorical_threshold=CATEGORICAL_THRESHOLD):
    """Load a headered CSV, inferring column kinds.

    A column is categorical when any cell fails to parse as a number or when
    it has at most `categorical_threshold` distinct values; levels are coded
    by first appearance. `schema_override` (dict or JSON path) maps column
    name -> {"kind": "continuous"|"categorical", "target": bool}.
    """
    header, data = _read_rows(path)
    override = {}
    if schema_override is not None:
        if isinstance(schema_override, (str, bytes)):
            with open(schema_override, "r", encoding="utf-8") as fh:
                override = json.load(fh)
        else:
            override = dict(schema_override)
        unknown = set(override) - set(header)
        if unknown:
            raise SchemaError(f"override names unknown columns: {sorted(unknown)}")

    n, width = len(data), len(header)
    values = np.empty((n, width), dtype=np.float64)
    columns = []
    target = None
    for j, name in enumerate(header):
        cells = [row[j] for row in data]
        parsed = [_parse_float(c) for c in cells]
        numeric = all(v is not None for v in parsed)
        spec = override.get(name, {})
        kind = spec.get("kind")
        if kind is None:
            if numeric and len(set(cells)) > categorical_threshold:
                kind = CONTINUOUS
            else:
                kind = CATEGORICAL
        if kind == CONTINUOUS:
            if not numeric:
                raise SchemaError(f"column {name!r} declared continuous but is not numeric")
            values[:, j] = parsed
            columns.append((name, ColumnKind.continuous()))
        elif kind == CATEGORICAL:
            levels, codes = [], {}
            for i, cell in enumerate(cells):
                code = codes.get(cell)
                if code is None:
                    code = len(levels)
                    codes[cell] = code
                    levels.append(cell)
                values[i, j] = code
            columns.append((name, ColumnKind.categorical(levels)))
        else:
            raise SchemaError(f"override for {name!r} has unknown kind {kind!r}")
        if spec.get("target"):
            if target is not None:
                raise SchemaError("more than one target column in override")
            target = j
    return DataTable(TableSchema(tuple(columns), target), values)


def write_csv(table, path):
    """Write a table with original header and categorical labels."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.schema.names)
        kinds = table.schema.kinds
        for row in table.values:
            out = []
            for j, cell in enumerate(row):
                if kinds[j].is_categorical:
                    out.append(kinds[j].levels[int(cell)])
                else:
                    out.append(repr(float(cell)))
            writer.writerow(out)


def read_csv_as(path, schema):
    """Read a CSV produced for `schema` (same header; labels map to codes)."""
    header, data = _read_rows(path)
    if tuple(header) != schema.names:
        raise SchemaError(f"header {header} does not match schema columns {list(schema.names)}")
    values = np.empty((len(data), schema.n_columns), dtype=np.float64)
    lookups = [
        {label: code for code, label in enumerate(kind.levels)} if kind.is_categorical else None
        for kind in schema.kinds
    ]
    for i, row in enumerate(data):
        for j, cell in enumerate(row):
            if lookups[j] is None:
                parsed = _parse_float(cell)
                if parsed is None:
                    raise SchemaError(f"row {i + 2}, column {header[j]!r}: not a number: {cell!r}")
                values[i, j] = parsed
            else:
                code = lookups[j].get(cell)
                if code is None:
                    raise SchemaError(f"row {i + 2}, column {header[j]!r}: unknown level {cell!r}")
                values[i, j] = code
    return DataTable(schema, values)


def minmax_fit_transform(table):
    """Scale continuous columns to [0, 1]; constant columns map to 0."""
    cont = table.schema.continuous_indices()
    values = np.array(table.values)
    mins = np.empty(len(cont))
    maxs = np.empty(len(cont))
    for slot, j in enumerate(cont):
        col = values[:, j]
        lo, hi = float(col.min()), float(col.max())
        mins[slot], maxs[slot] = lo, hi
        if hi > lo:
            values[:, j] = (col - lo) / (hi - lo)
        else:
            values[:, j] = 0.0
    state = ScalerState(cont, mins, maxs)
    scaled = table.with_values(values)
    if cont:
        lows = values[:, cont]
        if lows.size and (lows.min() < -1e-9 or lows.max() > 1 + 1e-9):
            raise StateError("scaling produced out-of-range values")
    return scaled, state


def minmax_inverse_clip(table, state):
    """Map continuous columns back to original units and clip to train bounds."""
    if tuple(state.columns) != table.schema.continuous_indices():
        raise SchemaError("scaler state does not match the table schema")
    values = np.array(table.values)
    for slot, j in enumerate(state.columns):
        lo, hi = state.mins[slot], state.maxs[slot]
        col = lo + values[:, j] * (hi - lo)
        values[:, j] = np.clip(col, lo, hi)
    return table.with_values(values)


class MinMaxTableScaler:
    """Estimator wrapper over minmax_fit_transform / minmax_inverse_clip."""

    def __init__(self):
        self.state_ = None

    def fit_transform(self, table):
        if self.state_ is not None:
            raise StateError("scaler already fitted")
        scaled, self.state_ = minmax_fit_transform(table)
        return scaled

    def inverse_transform(self, table):
        if self.state_ is None:
            raise StateError("scaler not fitted")
        return minmax_inverse_clip(table, self.state_)


@dataclass(frozen=True)
class OneHotMap:
    """Column layout of the encoded matrix: per input column a slice."""

    schema: TableSchema
    starts: tuple
    width: int

    def block(self, column):
        start = self.starts[column]
        kind = self.schema.kind_of(column)
        span = kind.cardinality if kind.is_categorical else 1
        return start, start + span


def one_hot_map(schema):
    starts = []
    width = 0
    for _, kind in schema.columns:
        starts.append(width)
        width += kind.cardinality if kind.is_categorical else 1
    return OneHotMap(schema, tuple(starts), width)


def one_hot_encode(table):
    """Expand categorical columns into indicator blocks."""
    mapping = one_hot_map(table.schema)
    out = np.zeros((table.n_rows, mapping.width), dtype=np.float64)
    for j, (_, kind) in enumerate(table.schema.columns):
        lo, hi = mapping.block(j)
        if kind.is_categorical:
            codes = table.values[:, j].astype(np.int64)
            out[np.arange(table.n_rows), lo + codes] = 1.0
        else:
            out[:, lo] = table.values[:, j]
    return out, mapping


def one_hot_decode(matrix, mapping):
    """Invert one_hot_encode; categorical blocks decode by argmax, ties to the lowest code."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != mapping.width:
        raise SchemaError(f"matrix width {matrix.shape} does not match encoding width {mapping.width}")
    schema = mapping.schema
    values = np.empty((matrix.shape[0], schema.n_columns), dtype=np.float64)
    for j, (_, kind) in enumerate(schema.columns):
        lo, hi = mapping.block(j)
        if kind.is_categorical:
            values[:, j] = np.argmax(matrix[:, lo:hi], axis=1)
        else:
            values[:, j] = matrix[:, lo]
    return DataTable(schema, values)


def split(table, test_fraction, seed, stratify=True):
    """Disjoint train/test partition, reproducible under seed.

    With `stratify` and a categorical target, per-class proportions are
    preserved to within one row.
    """
    n = table.n_rows
    if n < 2:
        raise ArgumentError("need at least two rows to split")
    if not (0.0 < test_fraction < 1.0):
        raise ArgumentError("test_fraction must lie in (0, 1)")
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test >= n:
        raise ArgumentError(f"test_fraction {test_fraction} leaves an empty side for n={n}")
    rng = np.random.default_rng(seed)
    use_strata = (
        stratify
        and table.schema.target_column is not None
        and table.schema.target_kind.is_categorical
    )
    if use_strata:
        codes = table.target_codes()
        test_idx = []
        for c in np.unique(codes):
            members = np.flatnonzero(codes == c)
            members = rng.permutation(members)
            take = int(round(len(members) * test_fraction))
            take = min(take, len(members) - 1) if len(members) > 1 else take
            test_idx.append(members[:take])
        test_idx = np.sort(np.concatenate(test_idx)) if test_idx else np.empty(0, dtype=np.intp)
        if len(test_idx) == 0 or len(test_idx) == n:
            raise ArgumentError("stratified split left one side empty")
    else:
        perm = rng.permutation(n)
        test_idx = np.sort(perm[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return table.take(train_idx), table.take(np.flatnonzero(mask))
