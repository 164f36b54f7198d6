"""Power-enhanced two-sample tests for high-dimensional means and
covariances, with Monte Carlo and batch-testing harnesses."""

from __future__ import annotations

__version__ = "0.1.0"

from .batch import (
    BatchResult,
    FeatureSet,
    FeatureSetCollection,
    bh_reject,
    load_feature_sets,
    run_batch,
)
from .combine import (
    CombinedReport,
    cauchy_combine,
    chisq_combine,
    fisher_combine,
)
from .covariance import (
    CovTestReport,
    TraceEstimates,
    cov_test,
    pair_terms,
    power_enhance_cov,
    sigma02_hat,
    trace_estimates,
    xi_hat,
)
from .data import ColumnSummary, TwoSampleData, load_two_sample, summarize_columns
from .errors import CalibrationError, ParseError, ValidationError
from .mean import (
    MarginalMean,
    MeanTestReport,
    marginal_mean_stats,
    mean_test,
    power_enhance_mean,
    sigma01_hat,
)
from .simulate import (
    CellResult,
    IndependenceReport,
    ScenarioSpec,
    independence_check,
    run_cell,
)
from .suite import METHODS, SuiteReport, report_to_json, run_all_tests

__all__ = [
    "__version__",
    "BatchResult",
    "FeatureSet",
    "FeatureSetCollection",
    "bh_reject",
    "load_feature_sets",
    "run_batch",
    "CombinedReport",
    "cauchy_combine",
    "chisq_combine",
    "fisher_combine",
    "CovTestReport",
    "TraceEstimates",
    "cov_test",
    "pair_terms",
    "power_enhance_cov",
    "sigma02_hat",
    "trace_estimates",
    "xi_hat",
    "ColumnSummary",
    "TwoSampleData",
    "load_two_sample",
    "summarize_columns",
    "CalibrationError",
    "ParseError",
    "ValidationError",
    "MarginalMean",
    "MeanTestReport",
    "marginal_mean_stats",
    "mean_test",
    "power_enhance_mean",
    "sigma01_hat",
    "CellResult",
    "IndependenceReport",
    "ScenarioSpec",
    "independence_check",
    "run_cell",
    "METHODS",
    "SuiteReport",
    "report_to_json",
    "run_all_tests",
]
