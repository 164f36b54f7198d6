"""Threshold schedule resolution and validation."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hdtwosample.errors import ValidationError
from hdtwosample.thresholds import cov_screen_threshold, mean_screen_threshold


def test_theory_schedule_is_log_p():
    assert mean_screen_threshold("theory", 100, 200) == pytest.approx(
        2.0 * math.log(100), rel=1e-15
    )
    assert cov_screen_threshold("theory", 100, 200) == pytest.approx(
        4.0 * math.log(100), rel=1e-15
    )


def test_practical_schedule_frozen_values():
    # 2 log(100) log(log 200) and twice that, as exact doubles.
    assert mean_screen_threshold("practical", 100, 200) == pytest.approx(
        15.357222913211274, rel=1e-15
    ), "mean practical threshold drifted"
    assert cov_screen_threshold("practical", 100, 200) == pytest.approx(
        30.714445826422548, rel=1e-15
    ), "cov practical threshold drifted"


def test_explicit_value_passes_through():
    assert mean_screen_threshold(7.5, 100, 200) == 7.5
    assert cov_screen_threshold(7.5, 2, 16) == 7.5
    assert mean_screen_threshold(8, 100, 200) == 8.0, "ints should coerce"


@pytest.mark.parametrize("bad", [1.0, 0.5, 0.0, -3.0, float("inf"), float("nan")])
def test_explicit_value_must_exceed_one(bad):
    with pytest.raises(ValidationError):
        mean_screen_threshold(bad, 100, 200)


def test_rejects_unknown_modes_and_bool():
    with pytest.raises(ValidationError):
        mean_screen_threshold("magic", 100, 200)
    with pytest.raises(ValidationError):
        mean_screen_threshold(True, 100, 200)


def test_log_modes_need_p_at_least_two():
    with pytest.raises(ValidationError):
        mean_screen_threshold("theory", 1, 200)
    with pytest.raises(ValidationError):
        cov_screen_threshold("practical", 1, 200)


def test_practical_mode_needs_enough_samples():
    with pytest.raises(ValidationError):
        mean_screen_threshold("practical", 100, 15)
    assert mean_screen_threshold("practical", 100, 16) > 0


@given(st.integers(2, 10**6), st.integers(16, 10**9))
def test_cov_threshold_doubles_mean_threshold(p, n):
    for mode in ("theory", "practical"):
        assert cov_screen_threshold(mode, p, n) == pytest.approx(
            2.0 * mean_screen_threshold(mode, p, n), rel=1e-12
        ), f"factor mismatch at mode={mode} p={p} n={n}"


@given(st.integers(2, 10**6), st.integers(16, 10**9))
def test_practical_exceeds_theory(p, n):
    # log log n > 1 for every allowed n, so the practical schedule is
    # always the stricter one.
    assert mean_screen_threshold("practical", p, n) > mean_screen_threshold(
        "theory", p, n
    )


@given(st.integers(2, 10**5))
def test_thresholds_increase_with_dimension(p):
    assert mean_screen_threshold("theory", p + 1, 100) > mean_screen_threshold(
        "theory", p, 100
    )
