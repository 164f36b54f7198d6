"""Batch testing of coordinate sets with false discovery control.

A feature-set file is a tab-separated text file with one set per line:

    set_name<TAB>category<TAB>member1<TAB>member2<TAB>...

Blank lines and lines starting with ``#`` are skipped.  Every member
must name a column of the data table; each set is tested by restricting
the data to its columns and running the full suite.  Benjamini-Hochberg
(BH) control is then applied per method within each category, so
discovery counts are comparable across methods at a fixed nominal FDR.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covariance import VAR_FLOOR
from .data import TwoSampleData
from .errors import ParseError, ValidationError
from .suite import METHODS, run_all_tests

__all__ = [
    "FeatureSet",
    "FeatureSetCollection",
    "load_feature_sets",
    "bh_reject",
    "SetResult",
    "BatchResult",
    "run_batch",
]


@dataclass(frozen=True)
class FeatureSet:
    """Named group of coordinates tested together."""

    name: str
    category: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class FeatureSetCollection:
    sets: tuple[FeatureSet, ...]

    def __post_init__(self) -> None:
        names = [s.name for s in self.sets]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate set names: {dupes}")

    @property
    def categories(self) -> tuple[str, ...]:
        seen: list[str] = []
        for s in self.sets:
            if s.category not in seen:
                seen.append(s.category)
        return tuple(seen)

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)


def load_feature_sets(path: str) -> FeatureSetCollection:
    """Parse a feature-set file.

    Duplicate members within a set are dropped (first occurrence kept);
    a set needs at least two distinct members to support a covariance
    comparison.
    """
    sets: list[FeatureSet] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 4:
                raise ParseError(
                    f"line {lineno}: expected name, category and at least "
                    f"two members, got {len(fields)} fields"
                )
            name = fields[0].strip()
            category = fields[1].strip()
            if not name or not category:
                raise ParseError(f"line {lineno}: empty set name or category")
            members: list[str] = []
            for member in (f.strip() for f in fields[2:]):
                if not member:
                    raise ParseError(f"line {lineno}: empty member name")
                if member not in members:
                    members.append(member)
            if len(members) < 2:
                raise ParseError(
                    f"line {lineno}: set {name!r} has fewer than two distinct members"
                )
            sets.append(FeatureSet(name, category, tuple(members)))
    if not sets:
        raise ParseError(f"{path!r} contains no feature sets")
    return FeatureSetCollection(tuple(sets))


def bh_reject(p_values, alpha: float) -> np.ndarray:
    """Benjamini-Hochberg step-up rejections at nominal FDR ``alpha``.

    Returns a boolean array aligned with the input.  With ``k`` the
    largest rank whose ordered p-value sits at or below ``rank * alpha /
    m``, every hypothesis with a p-value at or below that ordered value
    is rejected, which resolves ties consistently.
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.ndim != 1:
        raise ValidationError("p_values must be one-dimensional")
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    if np.isnan(p).any() or (p < 0.0).any() or (p > 1.0).any():
        raise ValidationError("p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    thresholds = alpha * np.arange(1, m + 1) / m
    passing = np.nonzero(ranked <= thresholds)[0]
    if passing.size == 0:
        return np.zeros(m, dtype=bool)
    cutoff = ranked[passing[-1]]
    return p <= cutoff


@dataclass(frozen=True)
class SetResult:
    """Suite p-values for one feature set."""

    name: str
    category: str
    size: int
    p_values: dict[str, float]
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "category": self.category,
            "size": self.size,
            "p_values": dict(self.p_values),
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class BatchResult:
    """Per-set p-values plus BH decisions per method within category."""

    results: tuple[SetResult, ...]
    rejected: dict[str, np.ndarray]
    alpha: float
    methods: tuple[str, ...]

    def category_counts(self) -> dict[str, dict[str, int]]:
        """Discovery counts per category and method."""
        counts: dict[str, dict[str, int]] = {}
        for idx, res in enumerate(self.results):
            row = counts.setdefault(
                res.category, {method: 0 for method in self.methods}
            )
            for method in self.methods:
                row[method] += bool(self.rejected[method][idx])
        return counts

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "methods": list(self.methods),
            "sets": [
                {**res.to_dict(), "rejected": {
                    method: bool(self.rejected[method][idx])
                    for method in self.methods
                }}
                for idx, res in enumerate(self.results)
            ],
            "category_counts": self.category_counts(),
        }


def _method_p_value(report, method: str) -> float:
    if method == "M":
        return report.mean.p_value_unenhanced
    if method == "MPE":
        return report.mean.p_value
    if method == "T":
        return report.covariance.p_value_unenhanced
    if method == "TPE":
        return report.covariance.p_value
    if method == "S":
        return report.combined.p_value_s
    if method == "C":
        return report.combined.p_value_c
    if method == "J":
        return report.combined.p_value_j
    raise ValidationError(f"unknown method {method!r}")


def run_batch(
    data: TwoSampleData,
    sets: FeatureSetCollection,
    *,
    alpha: float = 0.05,
    methods: tuple[str, ...] = METHODS,
    threshold_mean: str | float = "practical",
    threshold_cov: str | float = "practical",
    var_floor: float = VAR_FLOOR,
    workers: int = 1,
) -> BatchResult:
    """Test every feature set and apply BH control within categories."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValidationError(f"unknown methods: {unknown}; expected from {METHODS}")
    if not methods:
        raise ValidationError("at least one method is required")
    if data.column_names is None:
        raise ValidationError("batch testing needs named data columns")
    column_index = {name: i for i, name in enumerate(data.column_names)}
    for s in sets:
        for member in s.members:
            if member not in column_index:
                raise ValidationError(
                    f"set {s.name!r} references unknown coordinate {member!r}"
                )

    def run_one(s: FeatureSet) -> SetResult:
        idx = [column_index[m] for m in s.members]
        subset = data.select_columns(idx)
        constant = (
            (subset.x.max(axis=0) == subset.x.min(axis=0)).all()
            and (subset.y.max(axis=0) == subset.y.min(axis=0)).all()
        )
        if constant:
            return SetResult(
                name=s.name,
                category=s.category,
                size=len(s.members),
                p_values={method: 1.0 for method in methods},
                degenerate=True,
            )
        report = run_all_tests(
            subset,
            alpha=alpha,
            threshold_mean=threshold_mean,
            threshold_cov=threshold_cov,
            var_floor=var_floor,
        )
        return SetResult(
            name=s.name,
            category=s.category,
            size=len(s.members),
            p_values={method: _method_p_value(report, method) for method in methods},
            degenerate=False,
        )

    if workers > 1 and len(sets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = tuple(pool.map(run_one, sets.sets))
    else:
        results = tuple(run_one(s) for s in sets)

    rejected = {
        method: np.zeros(len(results), dtype=bool) for method in methods
    }
    by_category: dict[str, list[int]] = {}
    for idx, res in enumerate(results):
        by_category.setdefault(res.category, []).append(idx)
    for method in methods:
        for indices in by_category.values():
            p_vec = np.asarray([results[i].p_values[method] for i in indices])
            flags = bh_reject(p_vec, alpha)
            for local, i in enumerate(indices):
                rejected[method][i] = flags[local]

    return BatchResult(
        results=results, rejected=rejected, alpha=alpha, methods=tuple(methods)
    )
