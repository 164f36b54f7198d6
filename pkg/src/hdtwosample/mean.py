"""Two-sample mean comparison with power enhancement.

The global statistic sums per-coordinate terms

    M_i = (S_x^2 - S_xx) / (n1 (n1-1)) + (S_y^2 - S_yy) / (n2 (n2-1))
          - 2 S_x S_y / (n1 n2),

where ``S_x, S_xx`` are the column sum and sum of squares in the first
group.  Each ``M_i`` is an unbiased estimate of ``(mu1_i - mu2_i)^2``.
Its null variance is estimated from the per-group sample variances
``v1, v2`` as

    nu_i = 2 v1^2 / (n1 (n1-1)) + 2 v2^2 / (n2 (n2-1)) + 4 v1 v2 / (n1 n2),

and the screen statistic ``sqrt(2) * M_i / sqrt(nu_i) + 1`` behaves like
a chi-square(1) draw under the null.  Coordinates whose screen statistic
clears the threshold contribute ``sqrt(p) * M_i / sqrt(nu_i)`` to the
enhancement term; under the null that term vanishes with probability
tending to one, so enhancement costs nothing at the usual sizes while
lifting power against sparse shifts.

The global scale reuses the covariance-trace estimates: the null
variance of ``sum_i M_i`` is ``2 A / (n1 (n1-1)) + 2 B / (n2 (n2-1)) +
4 C / (n1 n2)`` with ``A, B, C`` estimating tr(S1^2), tr(S2^2) and
tr(S1 S2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import covariance, probdist
from .covariance import VAR_FLOOR, TraceEstimates
from .data import TwoSampleData
from .errors import CalibrationError, ValidationError
from .thresholds import mean_screen_threshold

__all__ = [
    "MarginalMean",
    "marginal_mean_stats",
    "power_enhance_mean",
    "sigma01_hat",
    "MeanTestReport",
    "mean_test",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MarginalMean:
    """Per-coordinate mean-difference statistic and its screening state."""

    index: int
    m_i: float
    nu_hat_i: float
    standardized: float
    degenerate: bool


def _marginal_arrays(
    x: np.ndarray, y: np.ndarray, var_floor: float = VAR_FLOOR
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized marginals: (m, nu, standardized, degenerate mask).

    The standardized entry is NaN for degenerate coordinates, which are
    identified by an exactly zero variance in both groups.
    """
    n1 = x.shape[0]
    n2 = y.shape[0]
    if n1 < 2 or n2 < 2:
        raise ValidationError("marginal statistics need at least 2 rows per group")
    sx = x.sum(axis=0)
    sy = y.sum(axis=0)
    sxx = (x * x).sum(axis=0)
    syy = (y * y).sum(axis=0)
    m = (
        (sx * sx - sxx) / (n1 * (n1 - 1))
        + (sy * sy - syy) / (n2 * (n2 - 1))
        - 2.0 * sx * sy / (n1 * n2)
    )
    cx = x - sx / n1
    cy = y - sy / n2
    v1 = (cx * cx).sum(axis=0) / (n1 - 1)
    v2 = (cy * cy).sum(axis=0) / (n2 - 1)
    # Exact zero for constant columns, not rounding residue.
    v1 = np.where(x.max(axis=0) == x.min(axis=0), 0.0, v1)
    v2 = np.where(y.max(axis=0) == y.min(axis=0), 0.0, v2)
    nu = (
        2.0 * v1 * v1 / (n1 * (n1 - 1))
        + 2.0 * v2 * v2 / (n2 * (n2 - 1))
        + 4.0 * v1 * v2 / (n1 * n2)
    )
    degenerate = nu == 0.0
    standardized = _SQRT2 * m / np.sqrt(np.maximum(nu, var_floor)) + 1.0
    standardized = np.where(degenerate, np.nan, standardized)
    return m, nu, standardized, degenerate


def marginal_mean_stats(
    data: TwoSampleData, summaries: tuple | None = None
) -> list[MarginalMean]:
    """Per-coordinate statistics as a list, in coordinate order.

    ``summaries`` is accepted for API symmetry with ``summarize_columns``
    but the moments are recomputed here either way; the marginal pass is
    a single sweep over the data.
    """
    del summaries
    m, nu, std, deg = _marginal_arrays(data.x, data.y)
    return [
        MarginalMean(
            index=i,
            m_i=float(m[i]),
            nu_hat_i=float(nu[i]),
            standardized=float(std[i]),
            degenerate=bool(deg[i]),
        )
        for i in range(data.p)
    ]


def power_enhance_mean(
    marginals: Sequence[MarginalMean],
    threshold: str | float,
    n: int,
    *,
    var_floor: float = VAR_FLOOR,
) -> tuple[float, list[int]]:
    """Enhancement term ``J_m`` and the selected coordinate indices.

    ``n`` is the total sample size ``n1 + n2``, needed to resolve the
    practical threshold schedule.
    """
    p = len(marginals)
    if p == 0:
        raise ValidationError("marginals must be nonempty")
    delta = mean_screen_threshold(threshold, p, n)
    m = np.asarray([entry.m_i for entry in marginals])
    nu = np.asarray([entry.nu_hat_i for entry in marginals])
    degenerate = np.asarray([entry.degenerate for entry in marginals])
    return _enhance_from_arrays(m, nu, degenerate, delta, p, var_floor)


def _enhance_from_arrays(
    m: np.ndarray,
    nu: np.ndarray,
    degenerate: np.ndarray,
    delta: float,
    p: int,
    var_floor: float,
) -> tuple[float, list[int]]:
    ratio = m / np.sqrt(np.maximum(nu, var_floor))
    screen = _SQRT2 * ratio + 1.0
    sel = ~degenerate & (screen > delta)
    j_m = math.sqrt(p) * float(ratio[sel].sum())
    return j_m, [int(i) for i in np.nonzero(sel)[0]]


def sigma01_hat(traces: TraceEstimates, n1: int, n2: int) -> float:
    """Null scale of the raw mean statistic, from the trace estimates.

    Raises
    ------
    CalibrationError
        If the variance estimate is nonpositive.
    """
    arg = (
        2.0 * traces.a_n1 / (n1 * (n1 - 1))
        + 2.0 * traces.b_n2 / (n2 * (n2 - 1))
        + 4.0 * traces.c_n12 / (n1 * n2)
    )
    if arg <= 0.0:
        raise CalibrationError(
            f"mean null scale is nonpositive: A={traces.a_n1!r}, "
            f"B={traces.b_n2!r}, C={traces.c_n12!r}"
        )
    return math.sqrt(arg)


@dataclass(frozen=True)
class MeanTestReport:
    """Outcome of the power-enhanced mean test."""

    m_raw: float
    sigma01_hat: float
    m_standardized: float
    j_m: float
    m_pe: float
    selected: list[int]
    degenerate: list[int]
    p_value: float
    log_p_value: float
    p_value_unenhanced: float
    threshold_mode: str | float
    threshold_used: float
    alpha: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "m_raw": self.m_raw,
            "sigma01_hat": self.sigma01_hat,
            "m_standardized": self.m_standardized,
            "j_m": self.j_m,
            "m_pe": self.m_pe,
            "selected": list(self.selected),
            "degenerate": list(self.degenerate),
            "p_value": self.p_value,
            "log_p_value": self.log_p_value,
            "p_value_unenhanced": self.p_value_unenhanced,
            "threshold_mode": self.threshold_mode,
            "threshold_used": self.threshold_used,
            "alpha": self.alpha,
            "reject": self.reject,
        }


def mean_test(
    data: TwoSampleData,
    *,
    threshold: str | float = "practical",
    alpha: float = 0.05,
    var_floor: float = VAR_FLOOR,
    traces: TraceEstimates | None = None,
    block_size: int = 256,
    workers: int = 1,
) -> MeanTestReport:
    """Power-enhanced test for equality of the two mean vectors.

    ``traces`` can be supplied by a caller that already ran the
    covariance sweep; otherwise a screening-free sweep computes them.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    delta = mean_screen_threshold(threshold, data.p, data.n1 + data.n2)
    m, nu, _std, degenerate = _marginal_arrays(data.x, data.y, var_floor)
    if traces is None:
        traces = covariance.trace_estimates(
            data.x, data.y, block_size=block_size, workers=workers
        )
    scale = sigma01_hat(traces, data.n1, data.n2)
    j_m, selected = _enhance_from_arrays(m, nu, degenerate, delta, data.p, var_floor)
    m_raw = float(m.sum())
    m_std = m_raw / scale
    m_pe = m_std + j_m
    z_alpha = probdist.normal_upper_quantile(alpha)
    return MeanTestReport(
        m_raw=m_raw,
        sigma01_hat=scale,
        m_standardized=m_std,
        j_m=j_m,
        m_pe=m_pe,
        selected=selected,
        degenerate=[int(i) for i in np.nonzero(degenerate)[0]],
        p_value=probdist.normal_upper(m_pe),
        log_p_value=probdist.normal_log_upper(m_pe),
        p_value_unenhanced=probdist.normal_upper(m_std),
        threshold_mode=threshold,
        threshold_used=delta,
        alpha=alpha,
        reject=m_pe >= z_alpha,
    )
