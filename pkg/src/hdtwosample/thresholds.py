"""Screening thresholds for the power-enhancement terms.

Two built-in schedules are provided for each test, plus an explicit
numeric override:

* ``"theory"``: ``2 * log(p)`` for the mean screen and ``4 * log(p)`` for
  the covariance screen.  These are the rates that drive the asymptotic
  no-false-selection guarantee.
* ``"practical"``: the same quantities multiplied by ``log(log(n))`` with
  ``n = n1 + n2``.  The slowly growing factor makes spurious selections
  under the null rare at realistic sample sizes, at a negligible cost in
  power against strong sparse signals.

Marginal screen statistics are calibrated so that, under the null, they
behave like chi-square(1) draws; a threshold is compared against that
scale.  Thresholds must exceed 1 so that every selected term contributes
a positive amount to the enhancement sum.
"""

from __future__ import annotations

import math

from .errors import ValidationError

__all__ = ["mean_screen_threshold", "cov_screen_threshold"]

#: Modes accepted by the threshold resolvers.
MODES = ("theory", "practical")


def _resolve(mode: str | float, p: int, n: int, base_factor: float) -> float:
    if isinstance(mode, bool):
        raise ValidationError("threshold mode must be 'theory', 'practical', or a number")
    if isinstance(mode, (int, float)):
        value = float(mode)
        if not math.isfinite(value) or value <= 1.0:
            raise ValidationError(
                f"explicit screening threshold must be a finite number > 1, got {value!r}"
            )
        return value
    if mode not in MODES:
        raise ValidationError(
            f"unknown threshold mode {mode!r}; expected 'theory', 'practical', or a number"
        )
    if p < 2:
        raise ValidationError(f"log-based threshold modes require p >= 2, got p={p}")
    base = base_factor * math.log(p)
    if mode == "theory":
        return base
    if n < 16:
        raise ValidationError(
            f"practical threshold mode requires n1 + n2 >= 16, got {n}"
        )
    return base * math.log(math.log(n))


def mean_screen_threshold(mode: str | float, p: int, n: int) -> float:
    """Resolve the mean-screen threshold ``delta`` for dimension ``p`` and
    total sample size ``n = n1 + n2``."""
    return _resolve(mode, p, n, 2.0)


def cov_screen_threshold(mode: str | float, p: int, n: int) -> float:
    """Resolve the covariance-screen threshold ``eta`` for dimension ``p``
    and total sample size ``n = n1 + n2``."""
    return _resolve(mode, p, n, 4.0)
