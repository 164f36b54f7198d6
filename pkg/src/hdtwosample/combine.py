"""Combining the mean and covariance tests into joint decisions.

Three rules are supported, each with a closed-form reference
distribution:

* Fisher: ``J = -2 log(p_m) - 2 log(p_c)``, chi-square with 4 degrees of
  freedom, upper tail ``(1 + J/2) exp(-J/2)``.
* Squared sum: ``S = M_pe^2 + T_pe^2``, chi-square with 2 degrees of
  freedom, upper tail ``exp(-S/2)``.
* Cauchy: ``C = tan((0.5 - p_m) pi) / 2 + tan((0.5 - p_c) pi) / 2``,
  standard Cauchy upper tail.

P-value inputs are clamped into ``[P_FLOOR, 1 - 2^-53]`` before any
transform; the ``*_from_logs`` variants accept natural-log p-values so
that extreme statistics (whose p-values underflow double precision)
still combine with full relative accuracy.  Fisher is exact in log
space; the Cauchy transform saturates at the floor, since its tangent
scale would otherwise overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import probdist
from .errors import ValidationError

__all__ = [
    "P_FLOOR",
    "fisher_combine",
    "fisher_from_logs",
    "chisq_combine",
    "cauchy_combine",
    "cauchy_from_logs",
    "CombinedReport",
    "combine_reports",
]

#: Lower clamp for p-values entering a combination rule.
P_FLOOR = 1e-300
LOG_P_FLOOR = math.log(P_FLOOR)

#: Largest double below 1; upper clamp for the Cauchy transform.
_P_CEIL = 1.0 - 2.0**-53

#: Below this, tan((0.5 - p) pi) is 1 / (pi p) to double precision.
_TAN_TAIL = 1e-15


def _clamp_p(p: float, name: str) -> float:
    p = float(p)
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise ValidationError(f"{name} must be a probability in [0, 1], got {p!r}")
    return min(max(p, P_FLOOR), _P_CEIL)


def _check_log_p(log_p: float, name: str) -> float:
    log_p = float(log_p)
    if math.isnan(log_p) or log_p > 0.0:
        raise ValidationError(f"{name} must be a log-probability <= 0, got {log_p!r}")
    return log_p


def fisher_combine(p_m: float, p_c: float) -> tuple[float, float]:
    """Fisher combination of two p-values: (statistic, p-value)."""
    p_m = _clamp_p(p_m, "p_m")
    p_c = _clamp_p(p_c, "p_c")
    stat = -2.0 * (math.log(p_m) + math.log(p_c))
    return stat, probdist.chisq_upper(stat, 4)


def fisher_from_logs(log_p_m: float, log_p_c: float) -> tuple[float, float]:
    """Fisher combination from natural-log p-values, exact at any scale."""
    log_p_m = _check_log_p(log_p_m, "log_p_m")
    log_p_c = _check_log_p(log_p_c, "log_p_c")
    stat = -2.0 * (log_p_m + log_p_c)
    return stat, probdist.chisq_upper(stat, 4)


def chisq_combine(m_pe: float, t_pe: float) -> tuple[float, float]:
    """Squared-sum combination of the two standardized statistics."""
    m_pe = float(m_pe)
    t_pe = float(t_pe)
    if math.isnan(m_pe) or math.isnan(t_pe):
        raise ValidationError("statistics must not be NaN")
    stat = m_pe * m_pe + t_pe * t_pe
    return stat, probdist.chisq_upper(stat, 2)


def _tangent_term(p: float) -> float:
    if p < _TAN_TAIL:
        return 1.0 / (math.pi * p)
    if p > 1.0 - _TAN_TAIL:
        return -1.0 / (math.pi * (1.0 - p))
    return math.tan((0.5 - p) * math.pi)


def cauchy_combine(p_m: float, p_c: float) -> tuple[float, float]:
    """Cauchy combination of two p-values: (statistic, p-value)."""
    p_m = _clamp_p(p_m, "p_m")
    p_c = _clamp_p(p_c, "p_c")
    stat = 0.5 * _tangent_term(p_m) + 0.5 * _tangent_term(p_c)
    return stat, probdist.cauchy_upper(stat)


def cauchy_from_logs(log_p_m: float, log_p_c: float) -> tuple[float, float]:
    """Cauchy combination from natural-log p-values.

    Logs below ``log(P_FLOOR)`` are floored there, keeping the tangent
    scale finite.
    """
    terms = []
    for name, log_p in (("log_p_m", log_p_m), ("log_p_c", log_p_c)):
        log_p = max(_check_log_p(log_p, name), LOG_P_FLOOR)
        if log_p < math.log(_TAN_TAIL):
            terms.append(math.exp(-log_p) / math.pi)
        else:
            terms.append(_tangent_term(math.exp(log_p)))
    stat = 0.5 * terms[0] + 0.5 * terms[1]
    return stat, probdist.cauchy_upper(stat)


@dataclass(frozen=True)
class CombinedReport:
    """Joint decisions from the three combination rules."""

    p_m: float
    p_c: float
    j_stat: float
    s_stat: float
    c_stat: float
    p_value_j: float
    p_value_s: float
    p_value_c: float
    log_p_value_j: float
    log_p_value_s: float
    reject_j: bool
    reject_s: bool
    reject_c: bool
    alpha: float

    def to_dict(self) -> dict:
        return {
            "p_m": self.p_m,
            "p_c": self.p_c,
            "j_stat": self.j_stat,
            "s_stat": self.s_stat,
            "c_stat": self.c_stat,
            "p_value_j": self.p_value_j,
            "p_value_s": self.p_value_s,
            "p_value_c": self.p_value_c,
            "log_p_value_j": self.log_p_value_j,
            "log_p_value_s": self.log_p_value_s,
            "reject_j": self.reject_j,
            "reject_s": self.reject_s,
            "reject_c": self.reject_c,
            "alpha": self.alpha,
        }


def combine_reports(mean_report, cov_report, *, alpha: float) -> CombinedReport:
    """Build the joint report from the two marginal test reports.

    Uses the log p-values carried by the reports, so combinations stay
    accurate when the marginal p-values underflow.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    j_stat, p_j = fisher_from_logs(mean_report.log_p_value, cov_report.log_p_value)
    s_stat, p_s = chisq_combine(mean_report.m_pe, cov_report.t_pe)
    c_stat, p_c_comb = cauchy_from_logs(
        mean_report.log_p_value, cov_report.log_p_value
    )
    return CombinedReport(
        p_m=mean_report.p_value,
        p_c=cov_report.p_value,
        j_stat=j_stat,
        s_stat=s_stat,
        c_stat=c_stat,
        p_value_j=p_j,
        p_value_s=p_s,
        p_value_c=p_c_comb,
        log_p_value_j=probdist.chisq_log_upper(j_stat, 4),
        log_p_value_s=probdist.chisq_log_upper(s_stat, 2),
        reject_j=j_stat >= probdist.chisq_upper_quantile(alpha, 4),
        reject_s=s_stat >= probdist.chisq_upper_quantile(alpha, 2),
        reject_c=c_stat >= probdist.cauchy_upper_quantile(alpha),
        alpha=alpha,
    )
