"""Tail probabilities and quantiles for the reference distributions.

Everything the testing pipeline needs reduces to three families:

* standard normal (upper-tail p-values for the standardized statistics),
* chi-square with 2 or 4 degrees of freedom (squared-sum and Fisher
  combination), where the survival functions have closed forms
  ``exp(-q/2)`` and ``(1 + q/2) * exp(-q/2)``,
* standard Cauchy (tangent-based combination).

The implementations stay in the standard library.  ``math.erfc`` carries
the normal tail down to about 1e-308; beyond the range where the direct
logarithm is representable, ``normal_log_upper`` switches to the
asymptotic expansion

    log(1 - Phi(x)) = -x^2/2 - log(x) - log(2*pi)/2
                      + log(1 - 1/x^2 + 3/x^4 - ...),

truncated at the eighth term, which is accurate to full double precision
for x >= 30.  Quantiles start from a rational approximation and are
polished with Newton steps in log space, so they remain stable far into
the tails.

All tail probabilities returned here are upper-tail values in [0, 1];
matching lower-tail values follow from ``1 - upper``.
"""

from __future__ import annotations

import math

from .errors import ValidationError

__all__ = [
    "normal_upper",
    "normal_lower",
    "normal_log_upper",
    "normal_upper_quantile",
    "chisq_upper",
    "chisq_log_upper",
    "chisq_upper_quantile",
    "cauchy_upper",
    "cauchy_upper_quantile",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Crossover to the asymptotic log-tail expansion.  At x = 30 the neglected
# ninth term is below 5e-18 relative, and the direct erfc path is still
# exact there, so both branches agree at the seam.
_LOG_TAIL_CROSSOVER = 30.0

# Odd double factorials (2k - 1)!! for k = 1..8.
_DOUBLE_FACTORIALS = (1.0, 3.0, 15.0, 105.0, 945.0, 10395.0, 135135.0, 2027025.0)


def _check_real(x: float, name: str) -> float:
    x = float(x)
    if math.isnan(x):
        raise ValidationError(f"{name} must not be NaN")
    return x


# --- standard normal ---------------------------------------------------


def normal_upper(x: float) -> float:
    """Upper-tail probability ``P(Z > x)`` for a standard normal."""
    x = _check_real(x, "x")
    return 0.5 * math.erfc(x / _SQRT2)


def normal_lower(x: float) -> float:
    """Lower-tail probability ``P(Z <= x)`` for a standard normal."""
    x = _check_real(x, "x")
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_log_upper(x: float) -> float:
    """Natural log of the normal upper-tail probability.

    Stays finite and accurate for arbitrarily large ``x``, where the
    probability itself underflows to zero.
    """
    x = _check_real(x, "x")
    if x <= 0.0:
        # log(1 - small) computed without cancellation
        return math.log1p(-normal_upper(-x))
    if x < _LOG_TAIL_CROSSOVER:
        return math.log(normal_upper(x))
    if math.isinf(x):
        return -math.inf
    inv_x2 = 1.0 / (x * x)
    series = 0.0
    sign = -1.0
    power = inv_x2
    for dfac in _DOUBLE_FACTORIALS:
        series += sign * dfac * power
        sign = -sign
        power *= inv_x2
    return -0.5 * x * x - math.log(x) - _LOG_SQRT_2PI + math.log1p(series)


def _hazard(x: float) -> float:
    """phi(x) / (1 - Phi(x)), computed through the log tail."""
    log_phi = -0.5 * x * x - _LOG_SQRT_2PI
    return math.exp(log_phi - normal_log_upper(x))


# Rational approximation for the normal quantile (Acklam's coefficients,
# relative error below 1.2e-9 over the full open interval).
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01,
    2.445134137142996e00, 3.754408661907416e00,
)
_ACKLAM_SPLIT = 0.02425


def _acklam_lower_quantile(p: float) -> float:
    """Initial guess for Phi^{-1}(p), 0 < p < 1."""
    if p < _ACKLAM_SPLIT:
        q = math.sqrt(-2.0 * math.log(p))
        c = _ACKLAM_C
        d = _ACKLAM_D
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        return num / den
    if p > 1.0 - _ACKLAM_SPLIT:
        return -_acklam_lower_quantile(1.0 - p)
    q = p - 0.5
    r = q * q
    a = _ACKLAM_A
    b = _ACKLAM_B
    num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
    den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    return q * num / den


def normal_upper_quantile(alpha: float) -> float:
    """Value ``z`` with ``P(Z > z) = alpha``, for ``alpha`` in (0, 1)."""
    alpha = _check_real(alpha, "alpha")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    z = -_acklam_lower_quantile(alpha)
    log_alpha = math.log(alpha)
    # Newton in log space: d/dz log(1 - Phi(z)) = -hazard(z).
    for _ in range(3):
        step = (normal_log_upper(z) - log_alpha) / _hazard(z)
        z += step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return z


# --- chi-square with 2 or 4 degrees of freedom -------------------------


def _check_df(df: int) -> int:
    if df not in (2, 4):
        raise ValidationError(f"df must be 2 or 4, got {df!r}")
    return df


def chisq_upper(q: float, df: int) -> float:
    """Upper-tail probability ``P(X > q)`` for chi-square with ``df`` in {2, 4}."""
    q = _check_real(q, "q")
    _check_df(df)
    if q < 0.0:
        raise ValidationError(f"q must be nonnegative, got {q!r}")
    if df == 2:
        return math.exp(-0.5 * q)
    return (1.0 + 0.5 * q) * math.exp(-0.5 * q)


def chisq_log_upper(q: float, df: int) -> float:
    """Natural log of ``chisq_upper``; finite for all finite ``q >= 0``."""
    q = _check_real(q, "q")
    _check_df(df)
    if q < 0.0:
        raise ValidationError(f"q must be nonnegative, got {q!r}")
    if df == 2:
        return -0.5 * q
    return math.log1p(0.5 * q) - 0.5 * q


def chisq_upper_quantile(alpha: float, df: int) -> float:
    """Value ``q`` with ``P(X > q) = alpha``, for ``alpha`` in (0, 1]."""
    alpha = _check_real(alpha, "alpha")
    _check_df(df)
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha!r}")
    if alpha == 1.0:
        return 0.0
    neg_log = -math.log(alpha)
    if df == 2:
        return 2.0 * neg_log
    # Solve (1 + h) * exp(-h) = alpha for h = q/2 via safeguarded Newton on
    # g(h) = log1p(h) - h + neg_log, which is strictly decreasing for h > 0.
    h = math.sqrt(2.0 * neg_log) if neg_log < 1.0 else neg_log + math.log1p(neg_log)
    lo, hi = 0.0, neg_log + 2.0 * math.log1p(neg_log) + 10.0
    for _ in range(80):
        g = math.log1p(h) - h + neg_log
        if g > 0.0:
            lo = h
        else:
            hi = h
        dg = -h / (1.0 + h)
        if dg != 0.0:
            h_new = h - g / dg
        else:
            h_new = 0.5 * (lo + hi)
        if not lo < h_new < hi:
            h_new = 0.5 * (lo + hi)
        if abs(h_new - h) <= 1e-15 * max(1.0, abs(h_new)):
            h = h_new
            break
        h = h_new
    return 2.0 * h


# --- standard Cauchy ---------------------------------------------------


def cauchy_upper(x: float) -> float:
    """Upper-tail probability ``P(X > x)`` for a standard Cauchy.

    Uses ``atan(1/x)`` in the far tails so small probabilities keep full
    relative precision instead of cancelling against 1/2.
    """
    x = _check_real(x, "x")
    if x > 1.0:
        return math.atan(1.0 / x) / math.pi
    if x < -1.0:
        return 1.0 - math.atan(-1.0 / x) / math.pi
    return 0.5 - math.atan(x) / math.pi


def cauchy_upper_quantile(alpha: float) -> float:
    """Value ``x`` with ``P(X > x) = alpha``, for ``alpha`` in (0, 1)."""
    alpha = _check_real(alpha, "alpha")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    if alpha < 0.25:
        return 1.0 / math.tan(math.pi * alpha)
    if alpha > 0.75:
        return -1.0 / math.tan(math.pi * (1.0 - alpha))
    return math.tan(math.pi * (0.5 - alpha))
