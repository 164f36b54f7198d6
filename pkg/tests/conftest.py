"""Shared fixtures and the acceptance-summary reporting hook."""

import re

import numpy as np
import pytest


@pytest.fixture
def rng():
    """Fresh deterministic generator per test."""
    return np.random.default_rng(20240817)


# Acceptance tests carry names like test_criterion_03_sparse_mean_power.
# The terminal summary prints one PASS/FAIL line per criterion so the
# whole gate can be audited without scrolling the full pytest output.
_CRITERION_RE = re.compile(r"test_criterion_(\d+)_([a-z0-9_]+)")

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    match = _CRITERION_RE.search(report.nodeid)
    if match is None:
        return
    key = (int(match.group(1)), match.group(2))
    if report.when == "call":
        _acceptance_outcomes[key] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        # Errors and skips during setup never reach the call phase.
        _acceptance_outcomes[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (number, slug), outcome in sorted(_acceptance_outcomes.items()):
        label = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper()
        )
        terminalreporter.write_line(
            f"criterion {number:2d} {slug.replace('_', ' '):<40s} {label}"
        )
