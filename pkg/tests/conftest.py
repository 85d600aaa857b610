import numpy as np
import pytest

from s3f.tabular import ColumnKind, DataTable, TableSchema

ACCEPTANCE_LINES = []


def record_acceptance(name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    line = f"[acceptance] {name}: {status}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_table(columns, target=None):
    """columns: list of (name, kind_tag, values); kind_tag 'c' or list of levels."""
    kinds = []
    cols = []
    for name, tag, values in columns:
        if tag == "c":
            kinds.append((name, ColumnKind.continuous()))
        else:
            kinds.append((name, ColumnKind.categorical(tag)))
        cols.append(np.asarray(values, dtype=np.float64))
    schema = TableSchema(tuple(kinds), target)
    return DataTable(schema, np.column_stack(cols))


@pytest.fixture(scope="session")
def iris_table():
    from sklearn.datasets import load_iris

    data = load_iris()
    X, y = data.data, data.target
    columns = tuple(
        (name.replace(" (cm)", "").replace(" ", "_"), ColumnKind.continuous())
        for name in data.feature_names
    ) + (("species", ColumnKind.categorical(list(data.target_names))),)
    schema = TableSchema(columns, target_column=4)
    return DataTable(schema, np.column_stack([X, y.astype(np.float64)]))


@pytest.fixture(scope="session")
def iris_csv(tmp_path_factory, iris_table):
    from s3f.tabular import write_csv

    path = tmp_path_factory.mktemp("data") / "iris.csv"
    write_csv(iris_table, str(path))
    return str(path)


def make_moons(n, seed=0, noise=0.08):
    """Two interleaved half-circles with a binary label column."""
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = rng.uniform(0, np.pi, n_out)
    t_in = rng.uniform(0, np.pi, n_in)
    x = np.concatenate([np.cos(t_out), 1.0 - np.cos(t_in)])
    y = np.concatenate([np.sin(t_out), 0.5 - np.sin(t_in)])
    x += rng.normal(0, noise, n)
    y += rng.normal(0, noise, n)
    label = np.concatenate([np.zeros(n_out), np.ones(n_in)])
    order = rng.permutation(n)
    return make_table(
        [
            ("x", "c", x[order]),
            ("y", "c", y[order]),
            ("moon", ["lower", "upper"], label[order]),
        ],
        target=2,
    )
