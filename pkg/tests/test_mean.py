"""Mean-difference statistics versus enumeration and invariances."""

import math

import numpy as np
import pytest

import oracles
from hdtwosample.covariance import TraceEstimates
from hdtwosample.data import TwoSampleData
from hdtwosample.errors import CalibrationError, ValidationError
from hdtwosample.mean import (
    marginal_mean_stats,
    mean_test,
    power_enhance_mean,
    sigma01_hat,
)


def dataset(rng, n1=8, n2=7, p=4, shift=0.0):
    x = rng.normal(size=(n1, p))
    y = rng.normal(size=(n2, p)) + shift
    return TwoSampleData(x, y)


def test_marginals_match_enumeration(rng):
    d = dataset(rng)
    marginals = marginal_mean_stats(d)
    assert len(marginals) == d.p
    for entry in marginals:
        i = entry.index
        assert entry.m_i == pytest.approx(
            oracles.mean_component(d.x, d.y, i), rel=1e-10, abs=1e-12
        ), f"component {i}"
        assert entry.nu_hat_i == pytest.approx(
            oracles.mean_component_variance(d.x, d.y, i), rel=1e-11
        ), f"variance {i}"
        assert not entry.degenerate


def test_marginal_is_symmetric_in_group_order(rng):
    d = dataset(rng)
    swapped = TwoSampleData(d.y, d.x)
    for a, b in zip(marginal_mean_stats(d), marginal_mean_stats(swapped)):
        assert a.m_i == pytest.approx(b.m_i, rel=1e-12, abs=1e-14), (
            "the squared-difference estimate must not care which sample is x"
        )
        assert a.nu_hat_i == pytest.approx(b.nu_hat_i, rel=1e-12)


def test_standardized_marginal_is_scale_free(rng):
    d = dataset(rng)
    lam = 2.9
    scaled = TwoSampleData(lam * d.x, lam * d.y)
    for a, b in zip(marginal_mean_stats(d), marginal_mean_stats(scaled)):
        assert b.m_i == pytest.approx(lam**2 * a.m_i, rel=1e-12, abs=1e-14)
        assert b.standardized == pytest.approx(a.standardized, rel=1e-9), (
            "screen statistic must be invariant to common rescaling"
        )


def test_enhancement_matches_enumeration(rng):
    d = dataset(rng, shift=0.8)
    marginals = marginal_mean_stats(d)
    for delta in (1.1, 1.4, 3.0):
        j_m, selected = power_enhance_mean(marginals, delta, d.n1 + d.n2)
        assert j_m == pytest.approx(
            oracles.mean_screen_sum(d.x, d.y, delta), rel=1e-9, abs=1e-9
        ), f"screened sum at threshold {delta}"
        for i in selected:
            std = marginals[i].standardized
            assert std > delta, f"selected index {i} below threshold"


def test_strong_shift_is_selected(rng):
    d = dataset(rng, n1=40, n2=40, p=6)
    x = np.array(d.x)
    x[:, 2] += 3.0
    shifted = TwoSampleData(x, d.y)
    marginals = marginal_mean_stats(shifted)
    j_m, selected = power_enhance_mean(marginals, "practical", 80)
    assert selected == [2], f"only the shifted coordinate should pass: {selected}"
    assert j_m > 0.0
    assert j_m == pytest.approx(
        math.sqrt(6) * marginals[2].m_i / math.sqrt(marginals[2].nu_hat_i), rel=1e-12
    )


def test_degenerate_coordinates_are_flagged_not_selected(rng):
    x = rng.normal(size=(8, 3))
    y = rng.normal(size=(8, 3))
    x[:, 1] = 2.0
    y[:, 1] = 5.0  # huge mean difference but zero variance in both groups
    d = TwoSampleData(x, y)
    marginals = marginal_mean_stats(d)
    assert marginals[1].degenerate
    assert math.isnan(marginals[1].standardized)
    j_m, selected = power_enhance_mean(marginals, 1.000001, 16)
    assert 1 not in selected, "degenerate coordinate must never be selected"
    report = mean_test(d, threshold="practical")
    assert report.degenerate == [1]


def test_null_scale_matches_enumeration(rng):
    d = dataset(rng, n1=6, n2=6, p=3)
    a, b, c, _ = oracles.cov_statistic(d.x, d.y)
    got = sigma01_hat(TraceEstimates(a, b, c), d.n1, d.n2)
    assert got == pytest.approx(oracles.mean_null_sd(d.x, d.y), rel=1e-12)


def test_sigma01_rejects_nonpositive_estimate():
    with pytest.raises(CalibrationError):
        sigma01_hat(TraceEstimates(-5.0, -5.0, 5.0), 10, 10)


def test_report_fields_consistent(rng):
    d = dataset(rng, n1=30, n2=30, p=50, shift=0.2)
    report = mean_test(d, threshold="practical", alpha=0.05)
    assert report.m_standardized == pytest.approx(report.m_raw / report.sigma01_hat)
    assert report.m_pe == pytest.approx(report.m_standardized + report.j_m)
    assert report.threshold_used == pytest.approx(
        2.0 * math.log(50) * math.log(math.log(60))
    )
    assert 0.0 <= report.p_value <= 1.0
    assert report.log_p_value == pytest.approx(math.log(report.p_value), rel=1e-9)
    assert report.p_value_unenhanced >= report.p_value - 1e-12, (
        "enhancement can only push the p-value down"
    )


def test_mean_test_accepts_external_traces(rng):
    d = dataset(rng, n1=10, n2=10, p=5)
    a, b, c, _ = oracles.cov_statistic(d.x, d.y)
    direct = mean_test(d)
    seeded = mean_test(d, traces=TraceEstimates(a, b, c))
    assert seeded.m_standardized == pytest.approx(direct.m_standardized, rel=1e-10)


def test_power_enhance_rejects_empty_marginals():
    with pytest.raises(ValidationError):
        power_enhance_mean([], 2.0, 20)


def test_mean_test_rejects_bad_alpha(rng):
    with pytest.raises(ValidationError):
        mean_test(dataset(rng), alpha=1.0)
