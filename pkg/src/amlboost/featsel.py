"""Feature selection: chi-squared screening for binary mutation flags and an
L1-regularized linear classifier path for expression features.

Both selectors take explicit row-index sets so callers can restrict them to
the train+validation partitions; passing the held-out test indices lets them
assert the test rows were never read.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SelectionError

log = logging.getLogger(__name__)

#: Mutation genes consolidated by prior studies and the ELN guidelines.
LITERATURE_GENES = (
    "FLT3", "NPM1", "DNMT3A", "IDH1", "IDH2", "TET2", "ASXL1",
    "RUNX1", "CEBPA", "NRAS", "KRAS", "SF3B1", "U2AF1", "SRSF2",
)


def literature_genes() -> tuple[str, ...]:
    """The fixed 14-gene literature panel."""
    return LITERATURE_GENES


# --------------------------------------------------------------------------
# chi-squared survival function via the regularized upper incomplete gamma
# --------------------------------------------------------------------------

_MAX_ITER = 600
_EPS = 1e-16


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized P(a, x) by series; converges fast for x < a + 1."""
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized Q(a, x) by Lentz's continued fraction; for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, dof: int = 1) -> float:
    """Upper-tail probability of the chi-squared distribution.

    Absolute error below 1e-10 on [0, 100] for small dof.
    """
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if x < 0:
        raise ValueError(f"chi2_sf needs x >= 0, got {x}")
    if x == 0.0:
        return 1.0
    a = dof / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, half)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, half)))


# --------------------------------------------------------------------------
# Pearson chi-squared on 2x2 contingency tables (no continuity correction)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Chi2Result:
    feature: str
    statistic: float
    p_value: float
    selected: bool


def chi2_statistic(table) -> float:
    """Pearson statistic for one 2x2 table [[a, b], [c, d]].

    A zero row or column margin means the feature or label is constant; by
    convention the statistic is 0 (p = 1, never selected).
    """
    t = np.asarray(table, dtype=float)
    if t.shape != (2, 2) or np.any(t < 0):
        raise ValueError("expected a nonnegative 2x2 table")
    rows = t.sum(axis=1)
    cols = t.sum(axis=0)
    n = t.sum()
    if n == 0 or np.any(rows == 0) or np.any(cols == 0):
        return 0.0
    expected = np.outer(rows, cols) / n
    return float(((t - expected) ** 2 / expected).sum())


def _check_rows(n_rows: int, rows, test_rows):
    rows = np.arange(n_rows, dtype=np.intp) if rows is None else np.asarray(rows, dtype=np.intp)
    if test_rows is not None:
        overlap = np.intersect1d(rows, np.asarray(test_rows, dtype=np.intp))
        if overlap.size:
            raise SelectionError(
                f"selection rows overlap the test partition ({overlap.size} rows, e.g. {overlap[:5]})"
            )
    return rows


def chi2_select(mut_table, labels, alpha: float = 0.05, *, feature_names=None,
                rows=None, test_rows=None) -> list[Chi2Result]:
    """Per-gene 2x2 test of mutation flag vs survival label.

    `mut_table` is samples x genes with 0/1 entries; `rows` restricts the
    test to the train+validation partitions.
    """
    x = np.asarray(mut_table)
    y = np.asarray(labels).astype(int)
    rows = _check_rows(x.shape[0], rows, test_rows)
    x = x[rows].astype(float)
    y = y[rows]
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(x.shape[1])]
    if not np.isin(np.unique(x), (0.0, 1.0)).all():
        raise SelectionError("chi2_select expects binary 0/1 features")
    pos = y == 1
    a = x[pos].sum(axis=0)          # mutated, label 1
    b = x[~pos].sum(axis=0)         # mutated, label 0
    c = pos.sum() - a               # wild-type, label 1
    d = (~pos).sum() - b
    results = []
    for i, name in enumerate(feature_names):
        stat = chi2_statistic([[a[i], b[i]], [c[i], d[i]]])
        p = chi2_sf(stat, 1)
        results.append(Chi2Result(feature=name, statistic=stat, p_value=p,
                                  selected=bool(p < alpha)))
    return results


# --------------------------------------------------------------------------
# L1-penalized linear classifier (squared hinge) by cyclic coordinate descent
# --------------------------------------------------------------------------

@njit(cache=True)
def _coord_min(a, c, lam):
    """Exact minimizer of f(t) = sum_i max(0, c_i - a_i*t)^2 + lam*|t|.

    The loss is C1 piecewise quadratic, so f' is a continuous nondecreasing
    piecewise-linear function except for the +/-lam subgradient jump at 0.
    Check 0 first, then walk the sorted breakpoints t_i = c_i/a_i on the side
    of the root, maintaining the active-set sums S_aa, S_ac.
    """
    n = a.shape[0]
    s_ac0 = 0.0
    for i in range(n):
        if c[i] > 0.0:
            s_ac0 += a[i] * c[i]
    d0 = -2.0 * s_ac0  # loss derivative at t = 0
    if d0 - lam <= 0.0 <= d0 + lam:
        return 0.0
    side = 1.0 if d0 + lam < 0.0 else -1.0

    # breakpoints on the chosen side, walked by increasing magnitude
    breaks = np.empty(n, dtype=np.float64)
    idx = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        if a[i] != 0.0:
            t = c[i] / a[i]
            if t * side > 0.0:
                breaks[m] = t * side
                idx[m] = i
                m += 1
    order = np.argsort(breaks[:m])

    # active set immediately past 0 on the chosen side
    s_aa = 0.0
    s_ac = 0.0
    for i in range(n):
        if c[i] > 0.0 or (c[i] == 0.0 and a[i] * side < 0.0):
            s_aa += a[i] * a[i]
            s_ac += a[i] * c[i]

    # walk in magnitude coordinates u = side * t, where the directional
    # derivative g(u) = 2*s_aa*u - 2*side*s_ac + lam starts negative and is
    # nondecreasing; return the first zero crossing
    prev = 0.0
    for k in range(m + 1):
        nxt = breaks[order[k]] if k < m else 1.0e300
        if prev > 0.0 and 2.0 * s_aa * prev - 2.0 * side * s_ac + lam >= 0.0:
            return side * prev  # crossing sits at the breakpoint itself
        if s_aa > 0.0:
            u = (2.0 * side * s_ac - lam) / (2.0 * s_aa)
            if u <= nxt:
                if u < prev:
                    u = prev
                return side * u
        if k < m:
            i = idx[order[k]]
            # sample i toggles as |t| grows past its breakpoint
            entering = (a[i] * side) < 0.0
            if entering:
                s_aa += a[i] * a[i]
                s_ac += a[i] * c[i]
            else:
                s_aa -= a[i] * a[i]
                s_ac -= a[i] * c[i]
        prev = nxt
    return side * prev  # derivative never crossed: minimum at the last break


@njit(cache=True)
def _cd_fit(x, y, lam, w, b, active, max_sweeps, tol):
    """Cyclic coordinate descent over the flagged columns, ascending index.

    x: (n, p) standardized features; y: +/-1 labels; w and b are warm-start
    state updated in place. Returns (b, sweeps_used).
    """
    n, p = x.shape
    margin = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = b
        for j in range(p):
            if w[j] != 0.0:
                acc += x[i, j] * w[j]
        margin[i] = 1.0 - y[i] * acc
    a_buf = np.empty(n, dtype=np.float64)
    c_buf = np.empty(n, dtype=np.float64)
    sweeps = 0
    for sweep in range(max_sweeps):
        max_change = 0.0
        # unpenalized intercept coordinate first
        for i in range(n):
            a_buf[i] = y[i]
            c_buf[i] = margin[i] + y[i] * b
        b_new = _coord_min(a_buf, c_buf, 0.0)
        if b_new != b:
            delta = b_new - b
            for i in range(n):
                margin[i] -= y[i] * delta
            max_change = abs(delta)
            b = b_new
        for j in range(p):
            if not active[j]:
                continue
            wj = w[j]
            for i in range(n):
                a_buf[i] = y[i] * x[i, j]
                c_buf[i] = margin[i] + a_buf[i] * wj
            w_new = _coord_min(a_buf, c_buf, lam)
            if w_new != wj:
                for i in range(n):
                    margin[i] -= a_buf[i] * (w_new - wj)
                change = abs(w_new - wj)
                if change > max_change:
                    max_change = change
                w[j] = w_new
        sweeps = sweep + 1
        if max_change < tol:
            break
    return b, sweeps


def _kkt_violations(x, y, w, b, lam, active, tol):
    margin = 1.0 - y * (x @ w + b)
    grad = -2.0 * (x.T @ (y * np.maximum(margin, 0.0)))
    violating = (np.abs(grad) > lam * (1.0 + 1e-9) + tol) & ~active
    return np.flatnonzero(violating)


@dataclass
class L1Path:
    """Solutions along a descending geometric grid of penalty strengths.

    The walk down the grid stops once the support size blows well past the
    calibration target (`stop_support`), so the arrays may cover a fitted
    prefix of the full grid.
    """

    strengths: np.ndarray            # descending, fitted prefix
    coefficients: np.ndarray         # (n_fitted, n_features)
    intercepts: np.ndarray
    nonzero_counts: np.ndarray
    feature_names: list[str]
    chosen_strength: float
    chosen_index: int
    selected_features: list[str]
    monotonicity_violations: list[tuple[float, float, int]]  # (stronger, weaker, lost)


def l1_select(exp_table, labels, target_count: int = 22, *, feature_names=None,
              rows=None, test_rows=None, n_strengths: int = 60,
              min_strength_ratio: float = 0.01, max_sweeps: int = 10_000,
              tol: float = 1e-6, standardize: bool = True,
              stop_support: int | None = None) -> L1Path:
    """Fit the L1 path and pick the strength whose support size is closest to
    `target_count` (ties resolved toward the stronger penalty).

    Loss is the squared hinge on +/-1 labels; each coordinate is minimized
    exactly in ascending column order, with a vectorized KKT screen pulling
    violators into the active set between passes. Columns are z-scored over
    the selected rows unless `standardize=False`.
    """
    x = np.asarray(exp_table, dtype=float)
    y01 = np.asarray(labels).astype(int)
    rows = _check_rows(x.shape[0], rows, test_rows)
    x = np.ascontiguousarray(x[rows])
    y = np.where(y01[rows] == 1, 1.0, -1.0)
    n, p = x.shape
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(p)]
    if len(feature_names) != p:
        raise ValueError("feature_names length does not match the table width")
    if standardize:
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std[std == 0.0] = 1.0
        x = (x - mean) / std
    if n_strengths < 30:
        raise ValueError("the regularization grid needs at least 30 strengths")

    # intercept-only optimum fixes lambda_max (all-zero solution above it)
    b0 = _coord_min(np.ascontiguousarray(y), np.ones(n), 0.0)
    margin0 = 1.0 - y * b0
    grad0 = -2.0 * (x.T @ (y * np.maximum(margin0, 0.0)))
    lam_max = float(np.max(np.abs(grad0)))
    if lam_max <= 0.0:
        raise SelectionError("labels carry no gradient at the intercept-only solution")
    strengths = lam_max * np.geomspace(1.0, min_strength_ratio, n_strengths)

    if stop_support is None:
        stop_support = 2 * target_count + 10

    w = np.zeros(p)
    b = float(b0)
    coefs = np.zeros((n_strengths, p))
    intercepts = np.zeros(n_strengths)
    n_fitted = 0
    for k, lam in enumerate(strengths):
        active = w != 0.0
        while True:
            b, _ = _cd_fit(x, y, lam, w, b, active, max_sweeps, tol)
            viol = _kkt_violations(x, y, w, b, lam, active, tol)
            if viol.size == 0:
                break
            active[viol] = True
        coefs[k] = w
        intercepts[k] = b
        n_fitted = k + 1
        if int(np.count_nonzero(w)) >= stop_support:
            break
    strengths = strengths[:n_fitted]
    coefs = coefs[:n_fitted]
    intercepts = intercepts[:n_fitted]
    nnz = (coefs != 0.0).sum(axis=1)
    if int(nnz.max()) == 0:
        raise SelectionError(
            f"no strength in [{strengths[-1]:.4g}, {strengths[0]:.4g}] yields a nonzero coefficient"
        )

    violations = []
    for k in range(1, n_fitted):
        if nnz[k] < nnz[k - 1]:  # weaker penalty lost support
            lost = int(nnz[k - 1] - nnz[k])
            violations.append((float(strengths[k - 1]), float(strengths[k]), lost))
            log.warning(
                "L1 path support dropped by %d between strengths %.4g -> %.4g",
                lost, strengths[k - 1], strengths[k],
            )

    gap = np.abs(nnz - target_count)
    candidates = np.flatnonzero((gap == gap.min()) & (nnz > 0))
    if candidates.size == 0:
        candidates = np.flatnonzero(nnz > 0)
    chosen = int(candidates[0])
    selected = [feature_names[j] for j in np.flatnonzero(coefs[chosen])]
    return L1Path(
        strengths=strengths,
        coefficients=coefs,
        intercepts=intercepts,
        nonzero_counts=nnz,
        feature_names=list(feature_names),
        chosen_strength=float(strengths[chosen]),
        chosen_index=chosen,
        selected_features=selected,
        monotonicity_violations=violations,
    )
