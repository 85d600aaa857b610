import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s3f.exceptions import ArgumentError, IngestError, SchemaError, StateError
from s3f.tabular import (
    ColumnKind,
    DataTable,
    TableSchema,
    load_csv,
    minmax_fit_transform,
    minmax_inverse_clip,
    one_hot_decode,
    one_hot_encode,
    read_csv_as,
    split,
    write_csv,
)

from conftest import make_table


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


class TestLoadCsv:
    def test_mixed_inference_and_codes(self, tmp_path):
        p = tmp_path / "t.csv"
        write_lines(p, ["num,cat", "1.5,a", "2.0,b", "3.1,a"])
        table = load_csv(str(p), categorical_threshold=0)
        kinds = table.schema.kinds
        assert not kinds[0].is_categorical
        assert kinds[1].is_categorical and kinds[1].cardinality == 2
        assert table.column(1).tolist() == [0.0, 1.0, 0.0]  # first-appearance coding
        assert table.column(0).tolist() == [1.5, 2.0, 3.1]

    def test_iris_schema(self, iris_csv):
        table = load_csv(iris_csv, schema_override={"species": {"target": True}})
        kinds = table.schema.kinds
        assert all(not k.is_categorical for k in kinds[:4])
        assert kinds[4].is_categorical and kinds[4].cardinality == 3
        assert table.n_rows == 150
        assert table.schema.target_column == 4

    def test_missing_cell_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        write_lines(p, ["a,b", "1,", "2,3"])
        with pytest.raises(IngestError):
            load_csv(str(p))

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        write_lines(p, ["a,b", "1,2", "3"])
        with pytest.raises(IngestError):
            load_csv(str(p))

    def test_unknown_override_column(self, tmp_path):
        p = tmp_path / "t.csv"
        write_lines(p, ["a", "1", "2"])
        with pytest.raises(SchemaError):
            load_csv(str(p), schema_override={"nope": {"kind": "continuous"}})

    def test_threshold_marks_small_numeric_categorical(self, tmp_path):
        p = tmp_path / "t.csv"
        write_lines(p, ["a"] + [str(i % 3) for i in range(30)])
        table = load_csv(str(p), categorical_threshold=20)
        assert table.schema.kinds[0].is_categorical
        assert table.schema.kinds[0].cardinality == 3

    def test_override_file_and_roundtrip(self, tmp_path):
        p = tmp_path / "t.csv"
        write_lines(p, ["x,y", "0.5,red", "1.5,blue", "2.5,red"])
        ov = tmp_path / "ov.json"
        ov.write_text(json.dumps({"x": {"kind": "continuous"}, "y": {"target": True}}))
        table = load_csv(str(p), schema_override=str(ov))
        assert table.schema.target_column == 1
        out = tmp_path / "copy.csv"
        write_csv(table, str(out))
        again = read_csv_as(str(out), table.schema)
        assert np.array_equal(again.values, table.values)


class TestScaler:
    def test_basic_columns(self):
        t = make_table([("a", "c", [2.0, 4.0, 6.0]), ("k", ["x", "y", "z"], [0, 1, 2])])
        scaled, state = minmax_fit_transform(t)
        assert scaled.column(0).tolist() == [0.0, 0.5, 1.0]
        assert scaled.column(1).tolist() == [0.0, 1.0, 2.0]  # categorical untouched
        assert (state.mins[0], state.maxs[0]) == (2.0, 6.0)

    def test_constant_column(self):
        t = make_table([("a", "c", [5.0, 5.0])])
        scaled, state = minmax_fit_transform(t)
        assert scaled.column(0).tolist() == [0.0, 0.0]
        back = minmax_inverse_clip(scaled, state)
        assert back.column(0).tolist() == [5.0, 5.0]

    def test_inverse_clips(self):
        t = make_table([("a", "c", [0.0, 10.0])])
        _, state = minmax_fit_transform(t)
        out = minmax_inverse_clip(t.with_values(np.array([[1.2], [0.5]])), state)
        assert out.column(0).tolist() == [10.0, 5.0]

    def test_schema_mismatch(self):
        t1 = make_table([("a", "c", [0.0, 1.0])])
        t2 = make_table([("a", "c", [0.0, 1.0]), ("b", "c", [1.0, 2.0])])
        _, state = minmax_fit_transform(t1)
        with pytest.raises(SchemaError):
            minmax_inverse_clip(t2, state)

    @settings(deadline=None, max_examples=50)
    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=30
        )
    )
    def test_roundtrip_property(self, values):
        t = make_table([("a", "c", values)])
        scaled, state = minmax_fit_transform(t)
        back = minmax_inverse_clip(scaled, state)
        span = max(values) - min(values)
        assert np.allclose(back.column(0), values, rtol=1e-12, atol=1e-12 * max(1.0, span))


class TestOneHot:
    def test_encode_blocks(self):
        t = make_table([("k", ["a", "b", "c"], [0, 2])])
        enc, mapping = one_hot_encode(t)
        assert enc.tolist() == [[1, 0, 0], [0, 0, 1]]
        assert mapping.width == 3

    def test_decode_argmax_and_ties(self):
        t = make_table([("k", ["a", "b", "c"], [0, 2])])
        _, mapping = one_hot_encode(t)
        out = one_hot_decode(np.array([[0.2, 0.9, 0.1], [0.5, 0.5, 0.0]]), mapping)
        assert out.column(0).tolist() == [1.0, 0.0]  # ties break to the lowest code

    def test_width_mismatch(self):
        t = make_table([("k", ["a", "b"], [0, 1])])
        _, mapping = one_hot_encode(t)
        with pytest.raises(SchemaError):
            one_hot_decode(np.zeros((2, 3)), mapping)

    def test_mixed_round_trip(self):
        t = make_table(
            [("x", "c", [0.25, 0.75, 0.5]), ("k", ["a", "b", "c"], [2, 0, 1])]
        )
        enc, mapping = one_hot_encode(t)
        back = one_hot_decode(enc, mapping)
        assert np.array_equal(back.values, t.values)


class TestSplit:
    def test_partition(self):
        t = make_table([("a", "c", np.arange(10.0))])
        train, test = split(t, 0.2, seed=7, stratify=False)
        assert train.n_rows == 8 and test.n_rows == 2
        merged = np.sort(np.concatenate([train.column(0), test.column(0)]))
        assert merged.tolist() == list(np.arange(10.0))

    def test_determinism(self):
        t = make_table([("a", "c", np.arange(50.0))])
        a1, b1 = split(t, 0.3, seed=3)
        a2, b2 = split(t, 0.3, seed=3)
        assert np.array_equal(a1.values, a2.values)
        assert np.array_equal(b1.values, b2.values)

    def test_stratified_keeps_minority_in_train(self):
        labels = [0] * 9 + [1]
        t = make_table(
            [("x", "c", np.arange(10.0)), ("y", ["n", "p"], labels)], target=1
        )
        train, test = split(t, 0.2, seed=0, stratify=True)
        assert set(train.column(1).astype(int)) == {0, 1}

    def test_stratified_proportions_within_one_row(self):
        labels = [0] * 40 + [1] * 60
        t = make_table(
            [("x", "c", np.arange(100.0)), ("y", ["n", "p"], labels)], target=1
        )
        train, test = split(t, 0.25, seed=1, stratify=True)
        test_codes = test.column(1).astype(int)
        assert abs((test_codes == 0).sum() - 10) <= 1
        assert abs((test_codes == 1).sum() - 15) <= 1

    def test_empty_side_rejected(self):
        t = make_table([("a", "c", [1.0, 2.0, 3.0])])
        with pytest.raises(ArgumentError):
            split(t, 0.01, seed=0)
        with pytest.raises(ArgumentError):
            split(t, 1.5, seed=0)


class TestDataTable:
    def test_values_immutable(self):
        t = make_table([("a", "c", [1.0, 2.0])])
        with pytest.raises(ValueError):
            t.values[0, 0] = 5.0

    def test_bad_codes_rejected(self):
        schema = TableSchema((("k", ColumnKind.categorical(["a", "b"])),))
        with pytest.raises(SchemaError):
            DataTable(schema, np.array([[2.0]]))

    def test_non_finite_rejected(self):
        schema = TableSchema((("x", ColumnKind.continuous()),))
        with pytest.raises(IngestError):
            DataTable(schema, np.array([[np.nan]]))

    def test_duplicate_names_rejected(self):
        with pytest.raises(SchemaError):
            TableSchema((("a", ColumnKind.continuous()), ("a", ColumnKind.continuous())))
