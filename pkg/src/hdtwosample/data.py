"""Loading and validation of two-sample data matrices.

The on-disk format is a delimited table (comma or tab, auto-detected from
the header line) with one header row of coordinate names and one row per
observation.  Group membership comes either from a label column inside
the table or from a sidecar label file with one label per data row.
Exactly two distinct labels must occur; the group listed first in file
order becomes sample ``x``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "TwoSampleData",
    "ColumnSummary",
    "load_two_sample",
    "summarize_columns",
]

#: Smallest group size for which the fourth-order U-statistics are defined.
MIN_GROUP_SIZE = 4


@dataclass(frozen=True)
class TwoSampleData:
    """Validated pair of samples over a shared set of coordinates.

    Attributes
    ----------
    x, y : np.ndarray
        Float64 matrices of shape (n1, p) and (n2, p).  Stored
        column-major, since every kernel in the pipeline consumes columns.
    column_names : tuple of str, optional
        Coordinate names from the source header, when loaded from a file.
    group_names : tuple of str, optional
        The two group labels, in the order (x, y).
    """

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] | None = None
    group_names: tuple[str, str] | None = None

    def __post_init__(self) -> None:
        x = np.asfortranarray(self.x, dtype=np.float64)
        y = np.asfortranarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise ValidationError("samples must be two-dimensional arrays")
        if x.shape[1] != y.shape[1]:
            raise ValidationError(
                f"samples disagree on dimension: {x.shape[1]} vs {y.shape[1]}"
            )
        if x.shape[1] < 1:
            raise ValidationError("data must have at least one coordinate")
        if x.shape[0] < MIN_GROUP_SIZE or y.shape[0] < MIN_GROUP_SIZE:
            raise ValidationError(
                f"each group needs at least {MIN_GROUP_SIZE} observations, "
                f"got n1={x.shape[0]}, n2={y.shape[0]}"
            )
        if not np.isfinite(x).all() or not np.isfinite(y).all():
            raise ValidationError("samples must not contain NaN or infinite values")
        if self.column_names is not None and len(self.column_names) != x.shape[1]:
            raise ValidationError("column_names length does not match dimension")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n1(self) -> int:
        return self.x.shape[0]

    @property
    def n2(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def select_columns(self, indices: "list[int] | np.ndarray") -> "TwoSampleData":
        """Return a new instance restricted to the given coordinate indices."""
        idx = np.asarray(indices, dtype=np.intp)
        names = None
        if self.column_names is not None:
            names = tuple(self.column_names[i] for i in idx)
        return TwoSampleData(self.x[:, idx], self.y[:, idx], names, self.group_names)


@dataclass(frozen=True)
class ColumnSummary:
    """Per-coordinate first and second moments for one group.

    ``variance`` uses the unbiased (n - 1) divisor and is exactly zero for
    constant columns.
    """

    sum: np.ndarray
    sumsq: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    n: int = field(default=0)


def _group_summary(mat: np.ndarray) -> ColumnSummary:
    n = mat.shape[0]
    col_sum = mat.sum(axis=0)
    col_sumsq = (mat * mat).sum(axis=0)
    mean = col_sum / n
    centered = mat - mean
    variance = (centered * centered).sum(axis=0) / (n - 1)
    # A constant column must report exactly zero variance; the centered
    # residuals can carry rounding noise of order eps * |mean|.
    constant = mat.max(axis=0) == mat.min(axis=0)
    if constant.any():
        variance = np.where(constant, 0.0, variance)
    return ColumnSummary(col_sum, col_sumsq, mean, variance, n)


def summarize_columns(data: TwoSampleData) -> tuple[ColumnSummary, ColumnSummary]:
    """Column moments for each group, in (x, y) order."""
    return _group_summary(data.x), _group_summary(data.y)


# --- file loading ------------------------------------------------------


def _detect_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def _parse_cell(token: str, lineno: int, colname: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(
            f"line {lineno}, column '{colname}': cannot parse {token!r} as a number"
        ) from None
    if not math.isfinite(value):
        raise ParseError(
            f"line {lineno}, column '{colname}': non-finite value {token!r}"
        )
    return value


def _read_label_file(path: str) -> list[str]:
    labels: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for raw in fh:
            token = raw.strip()
            if token:
                labels.append(token)
    if not labels:
        raise ParseError(f"label file {path!r} is empty")
    return labels


def load_two_sample(
    path: str,
    *,
    group_col: str | None = None,
    label_file: str | None = None,
    delimiter: str | None = None,
) -> TwoSampleData:
    """Load a delimited data table and split it into two samples.

    Parameters
    ----------
    path : str
        Delimited file with a header row of coordinate names.
    group_col : str, optional
        Name of the column holding group labels.
    label_file : str, optional
        Sidecar file with one label per data row.  Exactly one of
        ``group_col`` and ``label_file`` must be given.
    delimiter : str, optional
        Field delimiter; auto-detected from the header when omitted.
    """
    if (group_col is None) == (label_file is None):
        raise ValidationError("exactly one of group_col and label_file is required")

    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise ParseError(f"{path!r}: empty input file")
        sep = delimiter if delimiter is not None else _detect_delimiter(first)
        header = next(csv.reader([first], delimiter=sep))
        header = [h.strip() for h in header]
        rows = list(csv.reader(fh, delimiter=sep))

    label_idx: int | None = None
    if group_col is not None:
        if group_col not in header:
            raise ValidationError(f"group column {group_col!r} not found in header")
        label_idx = header.index(group_col)
    value_cols = [i for i in range(len(header)) if i != label_idx]
    names = tuple(header[i] for i in value_cols)
    if len(set(names)) != len(names):
        raise ValidationError("duplicate coordinate names in header")

    values: list[list[float]] = []
    labels: list[str] = []
    for offset, row in enumerate(rows):
        lineno = offset + 2  # header occupies line 1
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        if label_idx is not None:
            labels.append(row[label_idx].strip())
        values.append(
            [_parse_cell(row[i].strip(), lineno, header[i]) for i in value_cols]
        )

    if label_file is not None:
        labels = _read_label_file(label_file)
        if len(labels) != len(values):
            raise ValidationError(
                f"label file has {len(labels)} entries for {len(values)} data rows"
            )

    groups: list[str] = []
    for lab in labels:
        if lab not in groups:
            groups.append(lab)
    if len(groups) != 2:
        raise ValidationError(
            f"grouping must name exactly two groups, found {len(groups)}: {groups!r}"
        )

    matrix = np.asarray(values, dtype=np.float64)
    mask = np.asarray([lab == groups[0] for lab in labels], dtype=bool)
    return TwoSampleData(
        matrix[mask], matrix[~mask], column_names=names, group_names=(groups[0], groups[1])
    )
