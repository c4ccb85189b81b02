import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nystrom_erm.data import (
    Dataset,
    format_libsvm,
    load_train_test,
    parse_libsvm,
    split,
    write_csv,
)
from nystrom_erm.errors import InvalidInputError, ParseError


def test_single_line():
    ds = parse_libsvm("+1 1:0.5 3:2.0", dim=3)
    np.testing.assert_array_equal(ds.features, [[0.5, 0.0, 2.0]])
    np.testing.assert_array_equal(ds.labels, [1.0])


def test_smaller_raw_label_maps_to_minus_one():
    ds = parse_libsvm("0 1:1.0\n1 2:1.0")
    np.testing.assert_array_equal(ds.labels, [-1.0, 1.0])
    ds = parse_libsvm("7 1:1\n3 1:2\n7 1:3")
    np.testing.assert_array_equal(ds.labels, [1.0, -1.0, 1.0])


FIVE_LINES = """\
-1 2:0.25 4:-1.5
+1 1:3
# comment line

+1 3:1e-2 5:4.0
-1
-1 1:-2 2:2 3:-2 4:2 5:-2  # trailing comment
"""


def test_five_line_file_matches_hand_expansion():
    ds = parse_libsvm(io.StringIO(FIVE_LINES))
    expected = np.array(
        [
            [0.0, 0.25, 0.0, -1.5, 0.0],
            [3.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.01, 0.0, 4.0],
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [-2.0, 2.0, -2.0, 2.0, -2.0],
        ]
    )
    np.testing.assert_array_equal(ds.features, expected)
    np.testing.assert_array_equal(ds.labels, [-1, 1, 1, -1, -1])
    assert (ds.n, ds.d) == (5, 5)


@pytest.mark.parametrize(
    "text, line",
    [
        ("+1 1:1\n-1 3:1 2:1", 2),
        ("+1 1:1\n-1 0:1", 2),
        ("+1 1:x", 1),
        ("+1 1:1\n+1 1:1\nfoo 1:1", 3),
        ("+1 2", 1),
        ("+1 1:1 1:2", 1),
    ],
)
def test_malformed_lines_report_line_number(text, line):
    with pytest.raises(ParseError) as err:
        parse_libsvm(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_multiclass_needs_binarization():
    text = "1 1:1\n2 1:2\n3 1:3\n2 1:4"
    with pytest.raises(InvalidInputError):
        parse_libsvm(text)
    ds = parse_libsvm(text, binarize=[2])
    np.testing.assert_array_equal(ds.labels, [-1, 1, -1, 1])


def test_dimension_hint_too_small():
    with pytest.raises(InvalidInputError):
        parse_libsvm("+1 4:1", dim=3)


def test_dataset_rejects_nonfinite_and_bad_labels():
    with pytest.raises(InvalidInputError):
        Dataset(np.array([[np.nan]]), np.array([1.0]))
    with pytest.raises(InvalidInputError):
        Dataset(np.array([[1.0]]), np.array([0.0]))


def test_split_sizes_and_partition():
    ds = Dataset(np.arange(10.0)[:, None], np.ones(10))
    tr, te = split(ds, 0.2, seed=3)
    assert (tr.n, te.n) == (8, 2)
    ids = np.r_[tr.features[:, 0], te.features[:, 0]]
    assert sorted(ids) == list(range(10))


def test_split_deterministic():
    ds = Dataset(np.arange(50.0)[:, None], np.ones(50))
    a = split(ds, 0.3, seed=11)
    b = split(ds, 0.3, seed=11)
    np.testing.assert_array_equal(a[0].features, b[0].features)
    np.testing.assert_array_equal(a[1].features, b[1].features)


def test_split_usps_sizes():
    ds = Dataset(np.zeros((9298, 1)), np.ones(9298))
    tr, te = split(ds, 0.2, seed=0)
    assert (tr.n, te.n) == (7439, 1859)


@pytest.mark.parametrize("f", [0.0, 1.0, -0.1, 1.5])
def test_split_rejects_bad_fraction(f):
    ds = Dataset(np.zeros((4, 1)), np.ones(4))
    with pytest.raises(InvalidInputError):
        split(ds, f, seed=0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 300), f=st.floats(0.01, 0.99), seed=st.integers(0, 2**31))
def test_split_partitions_exactly(n, f, seed):
    ds = Dataset(np.arange(n, dtype=float)[:, None], np.ones(n))
    tr, te = split(ds, f, seed)
    a, b = set(tr.features[:, 0]), set(te.features[:, 0])
    assert a | b == set(range(n)) and not a & b


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 8),
    d=st.integers(1, 6),
    seed=st.integers(0, 2**31),
)
def test_parse_serialize_roundtrip(n, d, seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((n, d)) * 10.0 ** r.integers(-5, 5, (n, d))
    X[r.random((n, d)) < 0.4] = 0.0
    y = np.where(r.random(n) < 0.5, -1.0, 1.0)
    y[0] = -1.0
    if n > 1:
        y[1] = 1.0
    ds = Dataset(X, y)
    back = parse_libsvm(format_libsvm(ds), dim=d)
    np.testing.assert_allclose(back.features, X, rtol=1e-9, atol=0)
    np.testing.assert_array_equal(back.labels, y)


def test_train_test_share_dimension(tmp_path):
    (tmp_path / "tr").write_text("+1 1:1 5:2\n-1 2:1\n")
    (tmp_path / "te").write_text("+1 1:1\n-1 3:1\n")
    tr, te = load_train_test(tmp_path / "tr", tmp_path / "te")
    assert tr.d == te.d == 5


def test_csv_export(tmp_path):
    ds = Dataset(np.array([[1.5, 0.0], [0.0, -2.0]]), np.array([1.0, -1.0]))
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "label,x1,x2"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data, [[1, 1.5, 0], [-1, 0, -2]])
