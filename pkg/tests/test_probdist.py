"""Distribution layer versus high-precision mpmath references."""

import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdtwosample.errors import ValidationError
from hdtwosample.probdist import (
    cauchy_upper,
    cauchy_upper_quantile,
    chisq_log_upper,
    chisq_upper,
    chisq_upper_quantile,
    normal_log_upper,
    normal_lower,
    normal_upper,
    normal_upper_quantile,
)

mp.mp.dps = 40

# Upper 5% quantiles, frozen from a 40-digit computation.
Z_05 = 1.6448536269514727
CHISQ2_05 = 5.991464547107982
CHISQ4_05 = 9.487729036781157
CAUCHY_05 = 6.313751514675043


def test_headline_quantiles_frozen():
    assert normal_upper_quantile(0.05) == pytest.approx(Z_05, rel=1e-14), (
        "normal 5% quantile drifted"
    )
    assert chisq_upper_quantile(0.05, 2) == pytest.approx(CHISQ2_05, rel=1e-14), (
        "chi-square df=2 5% quantile drifted"
    )
    assert chisq_upper_quantile(0.05, 4) == pytest.approx(CHISQ4_05, rel=1e-14), (
        "chi-square df=4 5% quantile drifted"
    )
    assert cauchy_upper_quantile(0.05) == pytest.approx(CAUCHY_05, rel=1e-14), (
        "Cauchy 5% quantile drifted"
    )


@pytest.mark.parametrize(
    "x",
    [-8.0, -3.0, -1.0, -0.1, 0.0, 0.1, 0.5, 1.0, 1.96, 3.0, 5.0, 8.0, 13.0, 25.0],
)
def test_normal_upper_matches_mpmath(x):
    want = float(mp.ncdf(-mp.mpf(x)))
    assert normal_upper(x) == pytest.approx(want, rel=1e-13), (
        f"normal tail at {x} off: {normal_upper(x)} vs {want}"
    )
    assert normal_lower(x) == pytest.approx(float(mp.ncdf(mp.mpf(x))), rel=1e-13)


@pytest.mark.parametrize("x", [0.5, 2.0, 8.0, 29.0, 30.0, 31.0, 40.0, 100.0, 1e4])
def test_normal_log_upper_matches_mpmath(x):
    want = float(mp.log(mp.ncdf(-mp.mpf(x))))
    assert normal_log_upper(x) == pytest.approx(want, rel=1e-13), (
        f"log tail at {x}: {normal_log_upper(x)} vs {want}"
    )


def test_log_tail_continuous_at_branch_switch():
    # The erfc and asymptotic-series branches must agree where they meet.
    below = normal_log_upper(29.999999999)
    above = normal_log_upper(30.000000001)
    assert abs(below - above) < 1e-6, f"branch seam jump: {below} vs {above}"


@pytest.mark.parametrize(
    "alpha", [0.5, 0.05, 0.01, 1e-4, 1e-10, 1e-50, 1e-200, 1e-300, 0.9, 0.999]
)
def test_normal_quantile_round_trip(alpha):
    z = normal_upper_quantile(alpha)
    # Probability round trip in log space so tiny alphas stay checkable.
    assert normal_log_upper(z) == pytest.approx(math.log(alpha), rel=1e-12), (
        f"round trip failed at alpha={alpha}"
    )


@pytest.mark.parametrize("df", [2, 4])
@pytest.mark.parametrize("q", [0.0, 0.3, 2.0, 5.99, 9.49, 40.0, 200.0])
def test_chisq_upper_matches_mpmath(q, df):
    want = float(mp.gammainc(df / 2, mp.mpf(q) / 2, mp.inf, regularized=True))
    assert chisq_upper(q, df) == pytest.approx(want, rel=1e-13), (
        f"chi-square tail df={df} q={q}"
    )
    if q > 0:
        assert chisq_log_upper(q, df) == pytest.approx(
            float(mp.log(want)), rel=1e-13
        )


@pytest.mark.parametrize("df", [2, 4])
@pytest.mark.parametrize("alpha", [1.0, 0.5, 0.05, 1e-3, 1e-12, 1e-250])
def test_chisq_quantile_round_trip(alpha, df):
    q = chisq_upper_quantile(alpha, df)
    assert chisq_log_upper(q, df) == pytest.approx(
        math.log(alpha), rel=1e-12, abs=1e-12
    ), f"chi-square quantile round trip df={df} alpha={alpha}"


@pytest.mark.parametrize("x", [-1e8, -5.0, -0.7, 0.0, 0.7, 5.0, 1e8, 1e300])
def test_cauchy_upper_matches_closed_form(x):
    # 1/2 - atan(x)/pi cancels catastrophically for huge x; give the
    # reference enough digits to survive it.
    with mp.workdps(350):
        want = float(mp.mpf(1) / 2 - mp.atan(mp.mpf(x)) / mp.pi)
    assert cauchy_upper(x) == pytest.approx(want, rel=1e-13, abs=1e-320), (
        f"cauchy tail at {x}"
    )


@pytest.mark.parametrize("alpha", [0.5, 0.3, 0.05, 1e-6, 1e-300, 0.95, 0.999999])
def test_cauchy_quantile_round_trip(alpha):
    assert cauchy_upper(cauchy_upper_quantile(alpha)) == pytest.approx(
        alpha, rel=1e-12
    ), f"cauchy round trip at {alpha}"


@given(st.floats(-50.0, 50.0))
def test_normal_upper_lower_complement(x):
    total = normal_upper(x) + normal_lower(x)
    assert abs(total - 1.0) < 1e-14, f"tails do not sum to 1 at {x}: {total}"


@given(st.floats(-40.0, 40.0), st.floats(1e-6, 10.0))
def test_normal_upper_strictly_decreasing(x, gap):
    lo, hi = normal_upper(x + gap), normal_upper(x)
    assert lo <= hi, f"tail increased between {x} and {x + gap}"


@given(st.floats(0.0, 28.0))
@settings(max_examples=200)
def test_log_upper_consistent_with_upper(x):
    assert math.exp(normal_log_upper(x)) == pytest.approx(
        normal_upper(x), rel=1e-12
    ), f"log and plain tails disagree at {x}"


@given(st.floats(1e-9, 1.0 - 1e-9))
@settings(max_examples=200)
def test_cauchy_quantile_inverts_everywhere(alpha):
    assert cauchy_upper(cauchy_upper_quantile(alpha)) == pytest.approx(
        alpha, rel=1e-9
    )


def test_rejects_nan_and_bad_domains():
    with pytest.raises(ValidationError):
        normal_upper(float("nan"))
    with pytest.raises(ValidationError):
        normal_upper_quantile(0.0)
    with pytest.raises(ValidationError):
        normal_upper_quantile(1.0)
    with pytest.raises(ValidationError):
        chisq_upper(-0.1, 2)
    with pytest.raises(ValidationError):
        chisq_upper(1.0, 3)
    with pytest.raises(ValidationError):
        chisq_upper_quantile(0.05, 5)
    with pytest.raises(ValidationError):
        cauchy_upper_quantile(1.0)
