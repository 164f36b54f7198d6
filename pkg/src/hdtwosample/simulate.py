"""Monte Carlo harness for size and power studies.

Scenarios
---------
Nine named hypotheses tie the data-generating process to the alternative
structure.  Both groups draw i.i.d. innovations (standard normal, or
gamma(4, 1/2) centered to mean zero and unit variance) and share the
null covariance unless stated:

* ``H0``: equal means, equal covariances.
* ``Hm_dense`` / ``Hm_sparse``: mean shift only.  The dense shift puts
  ``sqrt(0.3 / sqrt(p))`` on the first ``floor(0.15 p)`` coordinates;
  the sparse shift puts ``0.3 * sqrt(log p)`` on the first
  ``ceil(p^0.05)`` coordinates.
* ``Hc_dense``: group two follows a moving-average process,
  ``Y_vi = Z_vi + 0.2 Z_v,i+1``, giving a banded covariance difference.
* ``Hc_sparse``: group one has covariance ``(1 + eps) I``; group two
  adds a symmetric perturbation ``U`` with four strictly-upper entries
  of size ``0.3 * sqrt(2 log p)`` (mirrored below).  The ridge
  ``eps = |min(lambda_min(U + I), 1)| + 0.05`` keeps the smallest
  eigenvalue of ``Sigma_2`` at 0.05 or above.
* ``Hb_dd``, ``Hb_ds``, ``Hb_sd``, ``Hb_ss``: both alternatives at once;
  the first letter picks the mean structure (dense/sparse), the second
  the covariance structure.

Reproducibility
---------------
Every replication draws from a counter-based Philox stream keyed by
``(seed, replication, role)``, so results do not depend on worker count
or execution order, and any single replication can be regenerated in
isolation.  Replications can be distributed over a process pool; BLAS
threading is pinned to one thread inside cell runs so that per-
replication arithmetic is identical no matter how the work is split.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .data import TwoSampleData
from .errors import CalibrationError, ValidationError
from . import probdist
from .suite import METHODS, run_all_tests

__all__ = [
    "HYPOTHESES",
    "ScenarioSpec",
    "rng_for",
    "mean_shift",
    "generate_ma1",
    "SparseCovPerturbation",
    "draw_sparse_perturbation",
    "generate_sparse_cov",
    "generate_two_sample",
    "CellResult",
    "run_cell",
    "IndependenceReport",
    "independence_check",
]

logger = logging.getLogger(__name__)

HYPOTHESES = (
    "H0",
    "Hm_dense",
    "Hm_sparse",
    "Hc_dense",
    "Hc_sparse",
    "Hb_dd",
    "Hb_ds",
    "Hb_sd",
    "Hb_ss",
)

_DENSE_MEAN = frozenset({"Hm_dense", "Hb_dd", "Hb_ds"})
_SPARSE_MEAN = frozenset({"Hm_sparse", "Hb_sd", "Hb_ss"})
_MA_COV = frozenset({"Hc_dense", "Hb_dd", "Hb_sd"})
_SPARSE_COV = frozenset({"Hc_sparse", "Hb_ds", "Hb_ss"})

#: Stream roles under one (seed, replication) key.
_ROLE_DATA = 0
_ROLE_STRUCTURE = 1

#: Number of strictly-upper perturbed entries in the sparse covariance draw.
_SPARSE_COV_ENTRIES = 4
_RIDGE_PAD = 0.05


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one simulation cell."""

    hypothesis: str
    n_per_group: int
    p: int
    innovation: str = "normal"
    replications: int = 1000
    alpha: float = 0.05
    seed: int = 0
    threshold_mean: str | float = "practical"
    threshold_cov: str | float = "practical"
    fix_perturbation: bool = False
    theta_cov: float = 0.2
    gamma_shape: float = 4.0
    gamma_scale: float = 0.5

    def __post_init__(self) -> None:
        if self.hypothesis not in HYPOTHESES:
            raise ValidationError(
                f"unknown hypothesis {self.hypothesis!r}; expected one of {HYPOTHESES}"
            )
        if self.n_per_group < 16:
            raise ValidationError(
                f"n_per_group must be at least 16, got {self.n_per_group}"
            )
        if self.p < 2:
            raise ValidationError(f"p must be at least 2, got {self.p}")
        if self.hypothesis in _SPARSE_COV and self.p < 4:
            raise ValidationError(
                "sparse covariance scenarios need p >= 4 for four distinct entries"
            )
        if self.replications < 1:
            raise ValidationError("replications must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.innovation not in ("normal", "gamma"):
            raise ValidationError(
                f"innovation must be 'normal' or 'gamma', got {self.innovation!r}"
            )
        if self.gamma_shape <= 0.0 or self.gamma_scale <= 0.0:
            raise ValidationError("gamma parameters must be positive")


def rng_for(seed: int, replication: int, role: int) -> np.random.Generator:
    """Independent Philox stream for one (seed, replication, role) key."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, role))
    return np.random.Generator(np.random.Philox(ss))


def _innovations(
    rng: np.random.Generator, rows: int, cols: int, spec: ScenarioSpec
) -> np.ndarray:
    if spec.innovation == "normal":
        return rng.standard_normal((rows, cols))
    draw = rng.gamma(spec.gamma_shape, spec.gamma_scale, size=(rows, cols))
    return draw - spec.gamma_shape * spec.gamma_scale


def mean_shift(hypothesis: str, p: int) -> np.ndarray:
    """Second-group mean vector implied by the hypothesis (zeros if none)."""
    mu = np.zeros(p)
    if hypothesis in _DENSE_MEAN:
        count = int(math.floor(0.15 * p))
        mu[:count] = math.sqrt(0.3 / math.sqrt(p))
    elif hypothesis in _SPARSE_MEAN:
        count = int(math.ceil(p ** 0.05))
        mu[:count] = 0.3 * math.sqrt(math.log(p))
    return mu


def generate_ma1(spec: ScenarioSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Moving-average route: shared innovations, optional MA(1) in group two."""
    n1 = n2 = spec.n_per_group
    p = spec.p
    z = _innovations(rng, n1 + n2, p + 1, spec)
    x = z[:n1, :p]
    theta2 = spec.theta_cov if spec.hypothesis in _MA_COV else 0.0
    if theta2 != 0.0:
        y = z[n1:, :p] + theta2 * z[n1:, 1:]
    else:
        y = z[n1:, :p]
    mu2 = mean_shift(spec.hypothesis, p)
    if mu2.any():
        y = y + mu2
    return x, y


@dataclass(frozen=True)
class SparseCovPerturbation:
    """A drawn sparse covariance perturbation and its derived ridge.

    The perturbation is supported on at most eight coordinates, so the
    square-root shift applied by the generator is a small dense block;
    full p-by-p materializations are available for audits only.
    """

    p: int
    positions: tuple[tuple[int, int], ...]
    value: float
    epsilon: float
    support: tuple[int, ...]
    block_eigvals: np.ndarray = field(repr=False)
    block_eigvecs: np.ndarray = field(repr=False)

    def dense_u(self) -> np.ndarray:
        u = np.zeros((self.p, self.p))
        for r, c in self.positions:
            u[r, c] = self.value
            u[c, r] = self.value
        return u

    def dense_sigma1(self) -> np.ndarray:
        return (1.0 + self.epsilon) * np.eye(self.p)

    def dense_sigma2(self) -> np.ndarray:
        return self.dense_sigma1() + self.dense_u()

    def sqrt_shift(self) -> np.ndarray:
        """Block ``D`` with ``sqrt(Sigma_2) = sqrt(1 + eps) I + scatter(D)``."""
        root = math.sqrt(1.0 + self.epsilon)
        gaps = np.sqrt(1.0 + self.epsilon + self.block_eigvals) - root
        return (self.block_eigvecs * gaps) @ self.block_eigvecs.T


def _decode_upper_index(p: int, linear: np.ndarray) -> list[tuple[int, int]]:
    # Row r owns columns r+1..p-1; cumulative offsets locate the row.
    counts = p - 1 - np.arange(p - 1)
    starts = np.concatenate(([0], np.cumsum(counts)))
    rows = np.searchsorted(starts, linear, side="right") - 1
    cols = rows + 1 + (linear - starts[rows])
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def draw_sparse_perturbation(
    p: int, rng: np.random.Generator
) -> SparseCovPerturbation:
    """Draw the four-entry symmetric perturbation and its ridge.

    The construction guarantees positive definiteness; the regeneration
    loop only exists to catch numerical surprises and logs if it fires.
    """
    total = p * (p - 1) // 2
    if total < _SPARSE_COV_ENTRIES:
        raise ValidationError(
            f"p={p} has only {total} strictly-upper entries; need {_SPARSE_COV_ENTRIES}"
        )
    value = 0.3 * math.sqrt(2.0 * math.log(p))
    for attempt in range(100):
        linear = np.sort(rng.choice(total, size=_SPARSE_COV_ENTRIES, replace=False))
        positions = _decode_upper_index(p, linear)
        support = sorted({idx for pair in positions for idx in pair})
        lookup = {idx: k for k, idx in enumerate(support)}
        block = np.zeros((len(support), len(support)))
        for r, c in positions:
            block[lookup[r], lookup[c]] = value
            block[lookup[c], lookup[r]] = value
        eigvals, eigvecs = np.linalg.eigh(block)
        lam_min = float(eigvals[0])
        epsilon = abs(min(1.0 + lam_min, 1.0)) + _RIDGE_PAD
        if (1.0 + epsilon + eigvals).min() > 0.0:
            return SparseCovPerturbation(
                p=p,
                positions=tuple(positions),
                value=value,
                epsilon=epsilon,
                support=tuple(support),
                block_eigvals=eigvals,
                block_eigvecs=eigvecs,
            )
        logger.warning(
            "sparse perturbation attempt %d left Sigma_2 indefinite; redrawing",
            attempt + 1,
        )
    raise CalibrationError("could not draw a positive definite sparse perturbation")


def generate_sparse_cov(
    spec: ScenarioSpec,
    rng: np.random.Generator,
    perturbation: SparseCovPerturbation,
) -> tuple[np.ndarray, np.ndarray]:
    """Sparse covariance route: exact square root applied on the support."""
    n1 = n2 = spec.n_per_group
    p = spec.p
    z = _innovations(rng, n1 + n2, p, spec)
    root = math.sqrt(1.0 + perturbation.epsilon)
    x = root * z[:n1]
    y = root * z[n1:]
    support = np.asarray(perturbation.support, dtype=np.intp)
    y[:, support] += z[n1:, support] @ perturbation.sqrt_shift()
    mu2 = mean_shift(spec.hypothesis, p)
    if mu2.any():
        y += mu2
    return x, y


def generate_two_sample(spec: ScenarioSpec, replication: int) -> tuple[np.ndarray, np.ndarray]:
    """Generate the replication's two samples from its keyed streams."""
    data_rng = rng_for(spec.seed, replication, _ROLE_DATA)
    if spec.hypothesis in _SPARSE_COV:
        structure_rep = 0 if spec.fix_perturbation else replication
        structure_rng = rng_for(spec.seed, structure_rep, _ROLE_STRUCTURE)
        perturbation = draw_sparse_perturbation(spec.p, structure_rng)
        return generate_sparse_cov(spec, data_rng, perturbation)
    return generate_ma1(spec, data_rng)


# --- cell runner -------------------------------------------------------


@dataclass(frozen=True)
class CellResult:
    """Aggregated rejection frequencies for one simulation cell.

    ``frequencies`` and ``std_errors`` are keyed by method name in
    ``METHODS`` order; the active fractions report how often each
    enhancement term was nonzero.
    """

    spec: ScenarioSpec
    replications: int
    frequencies: dict[str, float]
    std_errors: dict[str, float]
    jm_active_fraction: float
    jc_active_fraction: float
    wall_time_s: float
    m_pe_values: np.ndarray | None = None
    t_pe_values: np.ndarray | None = None

    def to_dict(self, *, include_timing: bool = False) -> dict:
        out = {
            "scenario": self.spec.hypothesis,
            "n_per_group": self.spec.n_per_group,
            "p": self.spec.p,
            "innovation": self.spec.innovation,
            "replications": self.replications,
            "seed": self.spec.seed,
            "alpha": self.spec.alpha,
            "methods": {
                name: {
                    "frequency": self.frequencies[name],
                    "std_error": self.std_errors[name],
                }
                for name in METHODS
            },
            "jm_active_fraction": self.jm_active_fraction,
            "jc_active_fraction": self.jc_active_fraction,
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out


def _one_replication(spec: ScenarioSpec, replication: int, collect: bool):
    x, y = generate_two_sample(spec, replication)
    data = TwoSampleData(x, y)
    report = run_all_tests(
        data,
        alpha=spec.alpha,
        threshold_mean=spec.threshold_mean,
        threshold_cov=spec.threshold_cov,
    )
    stats = (report.mean.m_pe, report.covariance.t_pe) if collect else None
    return (
        report.rejections,
        report.mean.j_m != 0.0,
        report.covariance.j_c != 0.0,
        stats,
    )


def _run_chunk(spec: ScenarioSpec, lo: int, hi: int, collect: bool) -> list:
    # Pinned BLAS keeps per-replication arithmetic identical regardless of
    # how replications are distributed over processes.
    with threadpool_limits(limits=1):
        return [_one_replication(spec, r, collect) for r in range(lo, hi)]


def run_cell(
    spec: ScenarioSpec,
    *,
    workers: int = 1,
    collect_statistics: bool = False,
) -> CellResult:
    """Run all replications of one cell and aggregate rejection rates."""
    if workers < 1:
        raise ValidationError(f"workers must be positive, got {workers}")
    start = time.perf_counter()
    reps = spec.replications
    if workers == 1:
        records = _run_chunk(spec, 0, reps, collect_statistics)
    else:
        chunk = max(1, math.ceil(reps / (workers * 4)))
        bounds = [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chunk, spec, lo, hi, collect_statistics)
                for lo, hi in bounds
            ]
            records = []
            for future in futures:
                records.extend(future.result())

    counts = {name: 0 for name in METHODS}
    jm_active = 0
    jc_active = 0
    m_pe = np.empty(reps) if collect_statistics else None
    t_pe = np.empty(reps) if collect_statistics else None
    for r, (rejections, jm, jc, stats) in enumerate(records):
        for name in METHODS:
            counts[name] += bool(rejections[name])
        jm_active += jm
        jc_active += jc
        if collect_statistics:
            m_pe[r], t_pe[r] = stats
    frequencies = {name: counts[name] / reps for name in METHODS}
    std_errors = {
        name: math.sqrt(frequencies[name] * (1.0 - frequencies[name]) / reps)
        for name in METHODS
    }
    return CellResult(
        spec=spec,
        replications=reps,
        frequencies=frequencies,
        std_errors=std_errors,
        jm_active_fraction=jm_active / reps,
        jc_active_fraction=jc_active / reps,
        wall_time_s=time.perf_counter() - start,
        m_pe_values=m_pe,
        t_pe_values=t_pe,
    )


# --- independence diagnostics ------------------------------------------


@dataclass(frozen=True)
class IndependenceReport:
    """Null-joint behavior of the two enhanced statistics."""

    spec: ScenarioSpec
    replications: int
    correlation: float
    grid: list[dict]
    frequencies: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "scenario": self.spec.hypothesis,
            "n_per_group": self.spec.n_per_group,
            "p": self.spec.p,
            "replications": self.replications,
            "correlation": self.correlation,
            "grid": list(self.grid),
            "frequencies": dict(self.frequencies),
        }


def independence_check(
    spec: ScenarioSpec, *, workers: int = 1
) -> IndependenceReport:
    """Correlation and joint-tail table for (M_pe, T_pe) under the null.

    The two statistics are asymptotically independent standard normals
    under H0, so the joint lower-tail frequency at grid point (x1, x2)
    should approach Phi(x1) * Phi(x2).
    """
    if spec.hypothesis != "H0":
        raise ValidationError("independence_check is defined under H0 only")
    cell = run_cell(spec, workers=workers, collect_statistics=True)
    m_pe = cell.m_pe_values
    t_pe = cell.t_pe_values
    correlation = float(np.corrcoef(m_pe, t_pe)[0, 1])
    quartiles = (
        probdist.normal_upper_quantile(0.75),
        0.0,
        probdist.normal_upper_quantile(0.25),
    )
    grid = []
    for x1 in quartiles:
        for x2 in quartiles:
            joint = float(np.mean((m_pe <= x1) & (t_pe <= x2)))
            expected = probdist.normal_lower(x1) * probdist.normal_lower(x2)
            grid.append(
                {"x1": x1, "x2": x2, "joint": joint, "expected": expected}
            )
    return IndependenceReport(
        spec=spec,
        replications=cell.replications,
        correlation=correlation,
        grid=grid,
        frequencies=cell.frequencies,
    )
