"""One-call pipeline running the mean test, the covariance test, and the
three combinations on a shared screening sweep.

The covariance sweep already produces the trace estimates the mean test
needs for its null scale, so the full suite costs a single pass over all
coordinate pairs plus an O(n p) marginal pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import combine, covariance, mean, probdist
from .covariance import VAR_FLOOR, CovTestReport, TraceEstimates
from .data import TwoSampleData
from .errors import ValidationError
from .mean import MeanTestReport
from .thresholds import cov_screen_threshold

__all__ = ["METHODS", "SuiteReport", "run_all_tests", "report_to_json"]

#: Canonical method order used in reports and simulation summaries:
#: plain and enhanced mean, plain and enhanced covariance, squared-sum,
#: Cauchy and Fisher combinations.
METHODS = ("M", "MPE", "T", "TPE", "S", "C", "J")


@dataclass(frozen=True)
class SuiteReport:
    """Joint outcome of all tests on one dataset."""

    mean: MeanTestReport
    covariance: CovTestReport
    combined: combine.CombinedReport
    rejections: dict[str, bool]
    alpha: float
    n1: int
    n2: int
    p: int

    def to_dict(self) -> dict:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "p": self.p,
            "alpha": self.alpha,
            "mean": self.mean.to_dict(),
            "covariance": self.covariance.to_dict(),
            "combined": self.combined.to_dict(),
            "rejections": dict(self.rejections),
        }


def run_all_tests(
    data: TwoSampleData,
    *,
    alpha: float = 0.05,
    threshold_mean: str | float = "practical",
    threshold_cov: str | float = "practical",
    var_floor: float = VAR_FLOOR,
    block_size: int = 256,
    workers: int = 1,
    max_selected_pairs: int = 100_000,
) -> SuiteReport:
    """Run every test and combination rule on one dataset."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    eta = cov_screen_threshold(threshold_cov, data.p, data.n1 + data.n2)
    sweep = covariance.cov_pass(
        data.x, data.y, eta=eta, var_floor=var_floor,
        block_size=block_size, workers=workers,
        max_selected_pairs=max_selected_pairs,
    )
    cov_report = covariance.report_from_pass(
        sweep, data.n1, data.n2, alpha=alpha, threshold_mode=threshold_cov
    )
    traces = TraceEstimates(sweep.trace_a, sweep.trace_b, sweep.trace_c)
    mean_report = mean.mean_test(
        data,
        threshold=threshold_mean,
        alpha=alpha,
        var_floor=var_floor,
        traces=traces,
    )
    combined = combine.combine_reports(mean_report, cov_report, alpha=alpha)
    z_alpha = probdist.normal_upper_quantile(alpha)
    rejections = {
        "M": mean_report.m_standardized >= z_alpha,
        "MPE": mean_report.m_pe >= z_alpha,
        "T": cov_report.t_standardized >= z_alpha,
        "TPE": cov_report.t_pe >= z_alpha,
        "S": combined.reject_s,
        "C": combined.reject_c,
        "J": combined.reject_j,
    }
    return SuiteReport(
        mean=mean_report,
        covariance=cov_report,
        combined=combined,
        rejections=rejections,
        alpha=alpha,
        n1=data.n1,
        n2=data.n2,
        p=data.p,
    )


def report_to_json(report: SuiteReport, *, indent: int = 2) -> str:
    """Serialize a suite report; floats use shortest round-trip form."""
    return json.dumps(report.to_dict(), indent=indent)
