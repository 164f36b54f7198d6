"""Two-sample covariance comparison with power enhancement.

The global statistic estimates the squared Frobenius distance
``sum_ij (sigma1_ij - sigma2_ij)^2`` through U-statistics.  For one pair
of coordinates ``(i, j)`` and one group with rows ``a_u = X_ui`` and
``b_u = X_uj`` the within-group term is

    A_ij = P1 / (n (n-1)) - 2 P2 / (n (n-1) (n-2))
           + P3 / (n (n-1) (n-2) (n-3)),

where ``P1, P2, P3`` are the index-distinct sums over the kernel patterns
``(a b)_u (a b)_v``, ``a_u (a b)_v b_k`` and ``a_u a_v b_k b_l``.  Writing
``S_ab = sum a b``, ``S_aab = sum a^2 b`` and so on, inclusion-exclusion
collapses them to power sums that cost O(n) per pair:

    P1 = S_ab^2 - S_aabb
    P2 = S_a S_ab S_b - (S_aab S_b + S_a S_abb) - S_ab^2 + 2 S_aabb
    P3 = (S_a^2 - S_aa)(S_b^2 - S_bb) - 4 P2 - 2 P1.

The cross-group term factorizes per group, so each of its four pieces is
a product of the two groups' first-order sums.  The pair statistic is
``T_ij = A_ij + B_ij - 2 C_ij`` and the global statistic is the sum of
``T_ij`` over all ordered pairs including the diagonal.

The screening pass never materializes a p-by-p matrix.  It walks the
upper triangle in row blocks; one stacked matrix product per group and
block yields all four second-order sum matrices at once, and every
per-pair quantity (``T_ij``, its variance estimate ``xi_ij``, the
screening decision) is consumed within the block.  Off-diagonal
contributions are doubled, which is exact because every formula here is
symmetric in ``(i, j)``.

The variance estimate for a pair is

    xi_ij = 2 * ( n1^{-2} sum_u (cx_ui cx_uj - s1_ij)^2
                + n2^{-2} sum_v (cy_vi cy_vj - s2_ij)^2 )^2

with centered columns ``c`` and sample covariances ``s``.  Inside the
blocked pass the centered-product sums expand into the same uncentered
power sums; the expansion cancels heavily when column means are large
relative to the spread, which is the usual caveat for one-pass moment
formulas and is covered by the shift-invariance tolerances in the tests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import TwoSampleData
from .errors import CalibrationError, ValidationError
from . import probdist
from .thresholds import cov_screen_threshold

__all__ = [
    "PairPowerSums",
    "pair_power_sums",
    "within_group_term",
    "cross_group_term",
    "pair_terms",
    "xi_hat",
    "TraceEstimates",
    "trace_estimates",
    "sigma02_hat",
    "CovPassResult",
    "cov_pass",
    "power_enhance_cov",
    "CovTestReport",
    "cov_test",
]

#: Guard floor applied to variance estimates before standardization.
VAR_FLOOR = 1e-300

_SQRT2 = math.sqrt(2.0)


def _require_group_sizes(n1: int, n2: int) -> None:
    if n1 < 4 or n2 < 4:
        raise ValidationError(
            f"fourth-order U-statistics need at least 4 rows per group, "
            f"got n1={n1}, n2={n2}"
        )


# --- scalar pair kernels ----------------------------------------------


@dataclass(frozen=True)
class PairPowerSums:
    """Power sums of two columns ``a``, ``b`` of one group."""

    s_a: float
    s_b: float
    s_aa: float
    s_bb: float
    s_ab: float
    s_aab: float
    s_abb: float
    s_aabb: float
    n: int

    @classmethod
    def from_columns(cls, a: np.ndarray, b: np.ndarray) -> "PairPowerSums":
        ab = a * b
        return cls(
            s_a=float(a.sum()),
            s_b=float(b.sum()),
            s_aa=float((a * a).sum()),
            s_bb=float((b * b).sum()),
            s_ab=float(ab.sum()),
            s_aab=float((a * ab).sum()),
            s_abb=float((ab * b).sum()),
            s_aabb=float((ab * ab).sum()),
            n=int(a.size),
        )


def pair_power_sums(matrix: np.ndarray, i: int, j: int) -> PairPowerSums:
    """Power sums for columns ``i`` and ``j`` of one group's matrix."""
    mat = np.asarray(matrix, dtype=np.float64)
    return PairPowerSums.from_columns(mat[:, i], mat[:, j])


def within_group_term(sums: PairPowerSums) -> float:
    """One group's contribution ``A_ij`` from its pair power sums.

    Every expression is written so that swapping the roles of the two
    columns permutes only commutative operations; the result for (i, j)
    and (j, i) is therefore identical bit for bit.
    """
    n = sums.n
    if n < 4:
        raise ValidationError(f"within-group term needs n >= 4, got n={n}")
    p1 = sums.s_ab * sums.s_ab - sums.s_aabb
    p2 = (
        (sums.s_a * sums.s_b) * sums.s_ab
        - (sums.s_aab * sums.s_b + sums.s_a * sums.s_abb)
        - sums.s_ab * sums.s_ab
        + 2.0 * sums.s_aabb
    )
    p3 = (
        (sums.s_a * sums.s_a - sums.s_aa) * (sums.s_b * sums.s_b - sums.s_bb)
        - 4.0 * p2
        - 2.0 * p1
    )
    return (
        p1 / (n * (n - 1))
        - 2.0 * p2 / (n * (n - 1) * (n - 2))
        + p3 / (n * (n - 1) * (n - 2) * (n - 3))
    )


def cross_group_term(sums_x: PairPowerSums, sums_y: PairPowerSums) -> float:
    """Cross-group contribution ``C_ij`` from both groups' pair sums."""
    n1 = sums_x.n
    n2 = sums_y.n
    if n1 < 2 or n2 < 2:
        raise ValidationError("cross-group term needs at least 2 rows per group")
    vx = sums_x.s_a * sums_x.s_b - sums_x.s_ab
    vy = sums_y.s_a * sums_y.s_b - sums_y.s_ab
    return (
        sums_x.s_ab * sums_y.s_ab / (n1 * n2)
        - vx * sums_y.s_ab / (n1 * n2 * (n1 - 1))
        - vy * sums_x.s_ab / (n1 * n2 * (n2 - 1))
        + vx * vy / (n1 * n2 * (n1 - 1) * (n2 - 1))
    )


def pair_terms(
    x: np.ndarray, y: np.ndarray, i: int, j: int
) -> tuple[float, float, float]:
    """Return ``(A_ij, B_ij, C_ij)`` for coordinate pair ``(i, j)``.

    Operates directly on raw arrays with no group-size guard beyond what
    the divisors require, so tests can exercise small cases.
    """
    sx = pair_power_sums(x, i, j)
    sy = pair_power_sums(y, i, j)
    return (
        within_group_term(sx),
        within_group_term(sy),
        cross_group_term(sx, sy),
    )


def _centered_products(mat: np.ndarray, i: int, j: int) -> np.ndarray:
    ci = mat[:, i] - mat[:, i].mean()
    cj = mat[:, j] - mat[:, j].mean()
    # Constant columns center to exact zero; the subtraction alone can
    # leave rounding residue of order eps * |mean|.
    if mat[:, i].max() == mat[:, i].min():
        ci = np.zeros_like(ci)
    if mat[:, j].max() == mat[:, j].min():
        cj = np.zeros_like(cj)
    return ci * cj


def xi_hat(x: np.ndarray, y: np.ndarray, i: int, j: int) -> float:
    """Variance estimate for ``T_ij``, from centered products directly."""
    n1 = x.shape[0]
    n2 = y.shape[0]
    if n1 < 2 or n2 < 2:
        raise ValidationError("xi_hat needs at least 2 rows per group")
    px = _centered_products(x, i, j)
    py = _centered_products(y, i, j)
    s1 = px.sum() / (n1 - 1)
    s2 = py.sum() / (n2 - 1)
    inner = ((px - s1) ** 2).sum() / n1**2 + ((py - s2) ** 2).sum() / n2**2
    return float(2.0 * inner * inner)


# --- trace estimates and null scale ------------------------------------


@dataclass(frozen=True)
class TraceEstimates:
    """Estimates of tr(S1^2), tr(S2^2) and tr(S1 S2), obtained by summing
    the within- and cross-group pair terms over all ordered pairs."""

    a_n1: float
    b_n2: float
    c_n12: float


def sigma02_hat(traces: TraceEstimates, n1: int, n2: int) -> float:
    """Null scale of the raw covariance statistic.

    Raises
    ------
    CalibrationError
        If the estimate is nonpositive and cannot standardize anything.
    """
    value = 2.0 * (traces.a_n1 / n1 + traces.b_n2 / n2)
    if value <= 0.0:
        raise CalibrationError(
            f"covariance null scale is nonpositive: "
            f"A={traces.a_n1!r}, B={traces.b_n2!r}"
        )
    return value


# --- blocked screening pass --------------------------------------------


@dataclass(frozen=True)
class CovPassResult:
    """Accumulated output of one sweep over the upper triangle of pairs.

    ``selected_pairs`` lists ordered pairs: each selected off-diagonal
    pair appears as both (i, j) and (j, i).  ``degenerate_pairs`` counts
    ordered pairs whose variance estimate is exactly zero; those pairs
    never enter the screening sum.
    """

    trace_a: float
    trace_b: float
    trace_c: float
    t_raw: float
    j_c: float
    selected_pairs: list[tuple[int, int]] = field(default_factory=list)
    selected_count: int = 0
    degenerate_pairs: int = 0
    truncated: bool = False
    eta: float | None = None


def _group_block(
    z: np.ndarray, zsq: np.ndarray, i0: int, i1: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Second-order sum matrices for rows [i0, i1) against columns [i0, p).

    One stacked product gives S_ab, S_aabb, S_aab and S_abb at once.
    """
    b = i1 - i0
    left = np.concatenate((z[:, i0:i1], zsq[:, i0:i1]), axis=1)
    right = np.concatenate((z[:, i0:], zsq[:, i0:]), axis=1)
    g = left.T @ right
    w = z.shape[1] - i0
    return g[:b, :w], g[b:, w:], g[b:, :w], g[:b, w:]


def _within_block(
    m1: np.ndarray,
    m2: np.ndarray,
    s_a: np.ndarray,
    s_b: np.ndarray,
    s_aa: np.ndarray,
    s_bb: np.ndarray,
    s_aab: np.ndarray,
    s_abb: np.ndarray,
    n: int,
) -> np.ndarray:
    p1 = m1 * m1 - m2
    p2 = (s_a * s_b) * m1 - (s_aab * s_b + s_a * s_abb) - m1 * m1 + 2.0 * m2
    p3 = (s_a * s_a - s_aa) * (s_b * s_b - s_bb) - 4.0 * p2 - 2.0 * p1
    return (
        p1 / (n * (n - 1))
        - 2.0 * p2 / (n * (n - 1) * (n - 2))
        + p3 / (n * (n - 1) * (n - 2) * (n - 3))
    )


def _inner_sumsq_block(
    m1: np.ndarray,
    m2: np.ndarray,
    s_aab: np.ndarray,
    s_abb: np.ndarray,
    mean_a: np.ndarray,
    mean_b: np.ndarray,
    s_a: np.ndarray,
    s_b: np.ndarray,
    s_aa: np.ndarray,
    s_bb: np.ndarray,
    const_pair: np.ndarray,
    n: int,
) -> np.ndarray:
    """``sum_u (c_ui c_uj - s_ij)^2`` for a block, from uncentered sums.

    Expanding the centered products gives a polynomial in the power sums;
    the final subtraction uses ``sum (cc - s)^2 = sum (cc)^2 - (n-2) s^2``
    because ``sum cc = (n-1) s``.  The exact quantity is a sum of squares,
    so cancellation noise is clamped at zero, and pairs involving a
    constant column (whose centered products vanish identically) are
    pinned to exact zero.
    """
    q = (
        m2
        - 2.0 * mean_b * s_aab
        - 2.0 * mean_a * s_abb
        + (mean_b * mean_b) * s_aa
        + (mean_a * mean_a) * s_bb
        + 4.0 * (mean_a * mean_b) * m1
        - 2.0 * mean_a * (mean_b * mean_b) * s_a
        - 2.0 * (mean_a * mean_a) * mean_b * s_b
        + n * (mean_a * mean_a) * (mean_b * mean_b)
    )
    sig = (m1 - n * mean_a * mean_b) / (n - 1)
    inner = np.maximum(q - (n - 2.0) * sig * sig, 0.0)
    if const_pair.any():
        inner = np.where(const_pair, 0.0, inner)
    return inner


@dataclass
class _BlockPartial:
    a: float
    b: float
    c: float
    t: float
    jc: float
    degenerate: int
    selected: np.ndarray  # (k, 2) global upper-triangle indices


def _scan_block(
    x: np.ndarray,
    y: np.ndarray,
    xsq: np.ndarray,
    ysq: np.ndarray,
    sums_x: np.ndarray,
    sums_y: np.ndarray,
    sumsq_x: np.ndarray,
    sumsq_y: np.ndarray,
    const_x: np.ndarray,
    const_y: np.ndarray,
    i0: int,
    i1: int,
    eta: float | None,
    var_floor: float,
) -> _BlockPartial:
    n1 = x.shape[0]
    n2 = y.shape[0]
    b = i1 - i0
    m1x, m2x, aab_x, abb_x = _group_block(x, xsq, i0, i1)
    m1y, m2y, aab_y, abb_y = _group_block(y, ysq, i0, i1)

    sa_x = sums_x[i0:i1, None]
    sb_x = sums_x[None, i0:]
    ua_x = sumsq_x[i0:i1, None]
    ub_x = sumsq_x[None, i0:]
    sa_y = sums_y[i0:i1, None]
    sb_y = sums_y[None, i0:]
    ua_y = sumsq_y[i0:i1, None]
    ub_y = sumsq_y[None, i0:]

    a_mat = _within_block(m1x, m2x, sa_x, sb_x, ua_x, ub_x, aab_x, abb_x, n1)
    b_mat = _within_block(m1y, m2y, sa_y, sb_y, ua_y, ub_y, aab_y, abb_y, n2)
    vx = sa_x * sb_x - m1x
    vy = sa_y * sb_y - m1y
    c_mat = (
        m1x * m1y / (n1 * n2)
        - vx * m1y / (n1 * n2 * (n1 - 1))
        - vy * m1x / (n1 * n2 * (n2 - 1))
        + vx * vy / (n1 * n2 * (n1 - 1) * (n2 - 1))
    )
    t_mat = a_mat + b_mat - 2.0 * c_mat

    rel = np.arange(b)[:, None]
    cols = np.arange(t_mat.shape[1])[None, :]
    upper = cols > rel
    diag = cols == rel

    def tri_sum(mat: np.ndarray) -> float:
        return float(2.0 * mat[upper].sum() + mat[diag].sum())

    partial = _BlockPartial(
        a=tri_sum(a_mat),
        b=tri_sum(b_mat),
        c=tri_sum(c_mat),
        t=tri_sum(t_mat),
        jc=0.0,
        degenerate=0,
        selected=np.empty((0, 2), dtype=np.intp),
    )
    if eta is None:
        return partial

    const_pair_x = const_x[i0:i1, None] | const_x[None, i0:]
    const_pair_y = const_y[i0:i1, None] | const_y[None, i0:]
    inner_x = _inner_sumsq_block(
        m1x, m2x, aab_x, abb_x,
        sums_x[i0:i1, None] / n1, sums_x[None, i0:] / n1,
        sa_x, sb_x, ua_x, ub_x, const_pair_x, n1,
    )
    inner_y = _inner_sumsq_block(
        m1y, m2y, aab_y, abb_y,
        sums_y[i0:i1, None] / n2, sums_y[None, i0:] / n2,
        sa_y, sb_y, ua_y, ub_y, const_pair_y, n2,
    )
    combined = inner_x / (n1 * n1) + inner_y / (n2 * n2)
    xi_mat = 2.0 * combined * combined

    eligible = xi_mat > 0.0
    ratio = t_mat / np.sqrt(np.maximum(xi_mat, var_floor))
    standardized = _SQRT2 * ratio + 1.0
    sel = eligible & (standardized > eta)

    partial.jc = float(2.0 * ratio[sel & upper].sum() + ratio[sel & diag].sum())
    ineligible = ~eligible
    partial.degenerate = int(
        2 * np.count_nonzero(ineligible & upper) + np.count_nonzero(ineligible & diag)
    )
    hits = np.argwhere(sel & (upper | diag))
    if hits.size:
        hits = hits + i0  # both axes are offsets from i0 in this block
    partial.selected = hits
    return partial


def cov_pass(
    x: np.ndarray,
    y: np.ndarray,
    *,
    eta: float | None = None,
    var_floor: float = VAR_FLOOR,
    block_size: int = 256,
    workers: int = 1,
    max_selected_pairs: int = 100_000,
) -> CovPassResult:
    """Single sweep over all coordinate pairs.

    Accumulates the trace estimates and the raw statistic, and, when a
    screening threshold ``eta`` is given, the enhancement sum and the
    list of selected pairs.  Memory stays at O(block_size * p).

    ``workers`` > 1 evaluates row blocks in a thread pool; partial
    results are merged in block order, so the output does not depend on
    the worker count.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValidationError("cov_pass expects two matrices with equal dimension")
    _require_group_sizes(x.shape[0], y.shape[0])
    if block_size < 1:
        raise ValidationError(f"block_size must be positive, got {block_size}")
    p = x.shape[1]

    xsq = x * x
    ysq = y * y
    sums_x = x.sum(axis=0)
    sums_y = y.sum(axis=0)
    sumsq_x = xsq.sum(axis=0)
    sumsq_y = ysq.sum(axis=0)
    const_x = x.max(axis=0) == x.min(axis=0)
    const_y = y.max(axis=0) == y.min(axis=0)

    bounds = [(i0, min(i0 + block_size, p)) for i0 in range(0, p, block_size)]

    def scan(bound: tuple[int, int]) -> _BlockPartial:
        return _scan_block(
            x, y, xsq, ysq, sums_x, sums_y, sumsq_x, sumsq_y,
            const_x, const_y, bound[0], bound[1], eta, var_floor,
        )

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(scan, bounds))
    else:
        partials = [scan(bound) for bound in bounds]

    trace_a = trace_b = trace_c = t_raw = jc_sum = 0.0
    degenerate = 0
    selected: list[tuple[int, int]] = []
    selected_count = 0
    truncated = False
    for part in partials:
        trace_a += part.a
        trace_b += part.b
        trace_c += part.c
        t_raw += part.t
        jc_sum += part.jc
        degenerate += part.degenerate
        for i, j in part.selected:
            ordered = ((int(i), int(j)),) if i == j else ((int(i), int(j)), (int(j), int(i)))
            for pair in ordered:
                selected_count += 1
                if len(selected) < max_selected_pairs:
                    selected.append(pair)
                else:
                    truncated = True

    return CovPassResult(
        trace_a=trace_a,
        trace_b=trace_b,
        trace_c=trace_c,
        t_raw=t_raw,
        j_c=math.sqrt(p) * jc_sum if eta is not None else 0.0,
        selected_pairs=selected,
        selected_count=selected_count,
        degenerate_pairs=degenerate,
        truncated=truncated,
        eta=eta,
    )


def trace_estimates(
    x: np.ndarray,
    y: np.ndarray,
    *,
    block_size: int = 256,
    workers: int = 1,
) -> TraceEstimates:
    """Trace estimates alone, via the same sweep with screening disabled."""
    result = cov_pass(x, y, eta=None, block_size=block_size, workers=workers)
    return TraceEstimates(result.trace_a, result.trace_b, result.trace_c)


def power_enhance_cov(
    data: TwoSampleData,
    threshold: str | float = "practical",
    *,
    var_floor: float = VAR_FLOOR,
    block_size: int = 256,
    workers: int = 1,
    max_selected_pairs: int = 100_000,
) -> tuple[float, list[tuple[int, int]]]:
    """Covariance enhancement term and the ordered pairs that drive it."""
    eta = cov_screen_threshold(threshold, data.p, data.n1 + data.n2)
    result = cov_pass(
        data.x, data.y, eta=eta, var_floor=var_floor,
        block_size=block_size, workers=workers,
        max_selected_pairs=max_selected_pairs,
    )
    return result.j_c, result.selected_pairs


# --- covariance test ---------------------------------------------------


@dataclass(frozen=True)
class CovTestReport:
    """Outcome of the power-enhanced covariance test."""

    t_raw: float
    sigma02_hat: float
    t_standardized: float
    j_c: float
    t_pe: float
    selected_pairs: list[tuple[int, int]]
    degenerate_pairs: int
    p_value: float
    log_p_value: float
    p_value_unenhanced: float
    threshold_mode: str | float
    threshold_used: float
    alpha: float
    reject: bool
    trace_a: float
    trace_b: float
    trace_c: float
    selected_count: int
    truncated: bool

    def to_dict(self) -> dict:
        return {
            "t_raw": self.t_raw,
            "sigma02_hat": self.sigma02_hat,
            "t_standardized": self.t_standardized,
            "j_c": self.j_c,
            "t_pe": self.t_pe,
            "selected_pairs": [list(pair) for pair in self.selected_pairs],
            "selected_count": self.selected_count,
            "truncated": self.truncated,
            "degenerate_pairs": self.degenerate_pairs,
            "p_value": self.p_value,
            "log_p_value": self.log_p_value,
            "p_value_unenhanced": self.p_value_unenhanced,
            "threshold_mode": self.threshold_mode,
            "threshold_used": self.threshold_used,
            "alpha": self.alpha,
            "reject": self.reject,
            "traces": {"a_n1": self.trace_a, "b_n2": self.trace_b, "c_n12": self.trace_c},
        }


def report_from_pass(
    result: CovPassResult,
    n1: int,
    n2: int,
    *,
    alpha: float,
    threshold_mode: str | float,
) -> CovTestReport:
    """Assemble the test report from a completed screening pass."""
    if result.eta is None:
        raise ValidationError("screening pass was run without a threshold")
    traces = TraceEstimates(result.trace_a, result.trace_b, result.trace_c)
    scale = sigma02_hat(traces, n1, n2)
    t_std = result.t_raw / scale
    t_pe = t_std + result.j_c
    z_alpha = probdist.normal_upper_quantile(alpha)
    return CovTestReport(
        t_raw=result.t_raw,
        sigma02_hat=scale,
        t_standardized=t_std,
        j_c=result.j_c,
        t_pe=t_pe,
        selected_pairs=result.selected_pairs,
        degenerate_pairs=result.degenerate_pairs,
        p_value=probdist.normal_upper(t_pe),
        log_p_value=probdist.normal_log_upper(t_pe),
        p_value_unenhanced=probdist.normal_upper(t_std),
        threshold_mode=threshold_mode,
        threshold_used=result.eta,
        alpha=alpha,
        reject=t_pe >= z_alpha,
        trace_a=result.trace_a,
        trace_b=result.trace_b,
        trace_c=result.trace_c,
        selected_count=result.selected_count,
        truncated=result.truncated,
    )


def cov_test(
    data: TwoSampleData,
    *,
    threshold: str | float = "practical",
    alpha: float = 0.05,
    var_floor: float = VAR_FLOOR,
    block_size: int = 256,
    workers: int = 1,
    max_selected_pairs: int = 100_000,
) -> CovTestReport:
    """Power-enhanced test for equality of the two covariance matrices."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    eta = cov_screen_threshold(threshold, data.p, data.n1 + data.n2)
    result = cov_pass(
        data.x, data.y, eta=eta, var_floor=var_floor,
        block_size=block_size, workers=workers,
        max_selected_pairs=max_selected_pairs,
    )
    return report_from_pass(
        result, data.n1, data.n2, alpha=alpha, threshold_mode=threshold
    )
