"""Data container validation and file loading."""

import numpy as np
import pytest

from hdtwosample.data import (
    MIN_GROUP_SIZE,
    TwoSampleData,
    load_two_sample,
    summarize_columns,
)
from hdtwosample.errors import ParseError, ValidationError


def make_data(n1=6, n2=5, p=3, seed=0):
    g = np.random.default_rng(seed)
    return TwoSampleData(g.normal(size=(n1, p)), g.normal(size=(n2, p)))


def test_shapes_and_properties():
    d = make_data()
    assert (d.n1, d.n2, d.p) == (6, 5, 3)
    assert d.x.dtype == np.float64 and d.y.dtype == np.float64
    assert d.x.flags.f_contiguous, "column kernels expect Fortran layout"


def test_rejects_dimension_mismatch_and_small_groups():
    g = np.random.default_rng(1)
    with pytest.raises(ValidationError):
        TwoSampleData(g.normal(size=(6, 3)), g.normal(size=(6, 4)))
    with pytest.raises(ValidationError):
        TwoSampleData(g.normal(size=(MIN_GROUP_SIZE - 1, 3)), g.normal(size=(6, 3)))
    with pytest.raises(ValidationError):
        TwoSampleData(g.normal(size=(6,)), g.normal(size=(6,)))


def test_rejects_non_finite_values():
    g = np.random.default_rng(2)
    x = g.normal(size=(6, 3))
    x[2, 1] = np.nan
    with pytest.raises(ValidationError):
        TwoSampleData(x, g.normal(size=(6, 3)))
    x[2, 1] = np.inf
    with pytest.raises(ValidationError):
        TwoSampleData(x, g.normal(size=(6, 3)))


def test_select_columns_keeps_names_aligned():
    g = np.random.default_rng(3)
    d = TwoSampleData(
        g.normal(size=(5, 4)),
        g.normal(size=(5, 4)),
        column_names=("a", "b", "c", "d"),
    )
    sub = d.select_columns([3, 1])
    assert sub.column_names == ("d", "b")
    np.testing.assert_array_equal(sub.x, d.x[:, [3, 1]])


def test_summaries_match_numpy():
    d = make_data(seed=4)
    sx, sy = summarize_columns(d)
    np.testing.assert_allclose(sx.mean, d.x.mean(axis=0), rtol=1e-14)
    np.testing.assert_allclose(sx.variance, d.x.var(axis=0, ddof=1), rtol=1e-12)
    np.testing.assert_allclose(sy.sumsq, (d.y**2).sum(axis=0), rtol=1e-14)
    assert sx.n == d.n1 and sy.n == d.n2


def test_constant_column_reports_exact_zero_variance():
    x = np.ones((6, 2)) * 3.7
    x[:, 1] = np.arange(6)
    d = TwoSampleData(x, np.random.default_rng(5).normal(size=(6, 2)))
    sx, _ = summarize_columns(d)
    assert sx.variance[0] == 0.0, "constant column variance must be exactly zero"
    assert sx.variance[1] > 0.0


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


TABLE_CSV = (
    "g1,g2,grp\n"
    + "\n".join(f"{i},{i * 2},A" for i in range(1, 6))
    + "\n"
    + "\n".join(f"{i},{i * 3},B" for i in range(1, 6))
    + "\n"
)


def test_load_with_group_column(tmp_path):
    path = _write(tmp_path, "t.csv", TABLE_CSV)
    d = load_two_sample(path, group_col="grp")
    assert d.group_names == ("A", "B"), "first label seen must become sample x"
    assert d.column_names == ("g1", "g2")
    assert (d.n1, d.n2, d.p) == (5, 5, 2)
    np.testing.assert_array_equal(d.x[:, 0], np.arange(1.0, 6.0))
    np.testing.assert_array_equal(d.y[:, 1], 3.0 * np.arange(1.0, 6.0))


def test_load_with_tab_delimiter_autodetect(tmp_path):
    text = TABLE_CSV.replace(",", "\t")
    path = _write(tmp_path, "t.tsv", text)
    d = load_two_sample(path, group_col="grp")
    assert (d.n1, d.n2, d.p) == (5, 5, 2)


def test_load_with_label_file(tmp_path):
    rows = "\n".join(f"{i},{i + 1}" for i in range(10))
    path = _write(tmp_path, "t.csv", "a,b\n" + rows + "\n")
    labels = _write(tmp_path, "lab.txt", "\n".join(["u"] * 5 + ["v"] * 5) + "\n")
    d = load_two_sample(path, label_file=labels)
    assert d.group_names == ("u", "v")
    assert d.n1 == 5 and d.n2 == 5


def test_group_sources_are_mutually_exclusive(tmp_path):
    path = _write(tmp_path, "t.csv", TABLE_CSV)
    with pytest.raises(ValidationError):
        load_two_sample(path)
    with pytest.raises(ValidationError):
        load_two_sample(path, group_col="grp", label_file=path)


def test_parse_errors_carry_location(tmp_path):
    bad = TABLE_CSV.replace("4,8,A", "4,oops,A")
    path = _write(tmp_path, "t.csv", bad)
    with pytest.raises(ParseError, match="line 5.*g2.*oops"):
        load_two_sample(path, group_col="grp")


def test_ragged_row_rejected(tmp_path):
    path = _write(tmp_path, "t.csv", "a,b,grp\n1,2,A\n3,B\n4,5,B\n")
    with pytest.raises(ParseError, match="expected 3 fields"):
        load_two_sample(path, group_col="grp")


def test_wrong_group_count_rejected(tmp_path):
    one = TABLE_CSV.replace(",B", ",A")
    path = _write(tmp_path, "t.csv", one)
    with pytest.raises(ValidationError, match="exactly two groups"):
        load_two_sample(path, group_col="grp")
    three = TABLE_CSV.replace("5,15,B", "5,15,Z")
    path = _write(tmp_path, "t3.csv", three)
    with pytest.raises(ValidationError, match="exactly two groups"):
        load_two_sample(path, group_col="grp")


def test_label_file_length_mismatch(tmp_path):
    rows = "\n".join(f"{i},{i + 1}" for i in range(10))
    path = _write(tmp_path, "t.csv", "a,b\n" + rows + "\n")
    labels = _write(tmp_path, "lab.txt", "\n".join(["u"] * 4 + ["v"] * 5) + "\n")
    with pytest.raises(ValidationError, match="9 entries for 10 data rows"):
        load_two_sample(path, label_file=labels)


def test_missing_group_column_rejected(tmp_path):
    path = _write(tmp_path, "t.csv", TABLE_CSV)
    with pytest.raises(ValidationError, match="'nope' not found"):
        load_two_sample(path, group_col="nope")


def test_blank_lines_skipped(tmp_path):
    padded = TABLE_CSV.replace("3,6,A\n", "3,6,A\n\n")
    path = _write(tmp_path, "t.csv", padded)
    d = load_two_sample(path, group_col="grp")
    assert d.n1 == 5 and d.n2 == 5
