"""Restricted maximum likelihood estimates of (p1, p2) under p1 - p2 = s0.

The general path solves the likelihood cubic with the trigonometric formula
and keeps the feasible root with the largest log-likelihood.  Data with a
sample proportion of exactly 0 or 1 in both arms, and the zero margin, have
factorised cubics and are handled in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .core import (
    NumericalError,
    Proportions,
    TrialCounts,
    as_margin,
    derive_proportions,
)

__all__ = [
    "CaseTag",
    "CubicCoefficients",
    "ConstrainedMle",
    "NotThreeRealRoots",
    "NoFeasibleRoot",
    "coefficients",
    "cubic_coefficients",
    "solve_cubic_three_real",
    "constrained_mle",
    "mle_general",
    "mle_both_ones",
    "mle_both_zeros",
    "mle_zero_one",
    "mle_one_zero",
    "mle_zero_margin",
    "root_table",
    "feasible_interval",
    "constrained_log_likelihood",
    "brute_force_mle",
]

ACOS_CLAMP = 1e-10
FEASIBLE_TOL = 1e-12


class NotThreeRealRoots(NumericalError):
    pass


class NoFeasibleRoot(NumericalError):
    pass


class CaseTag(str, enum.Enum):
    GENERAL = "General"
    BOTH_ONES = "BothOnes"
    BOTH_ZEROS = "BothZeros"
    ZERO_ONE = "ZeroOne"
    ONE_ZERO = "OneZero"
    ZERO_MARGIN = "ZeroMargin"

    def __str__(self):
        return self.value


class CubicCoefficients(NamedTuple):
    a: float
    b: float
    c: float
    d: float

    def __call__(self, x):
        """Evaluate the cubic at ``x`` (Horner)."""
        return ((self.a * x + self.b) * x + self.c) * x + self.d

    def derivative(self, x):
        return (3 * self.a * x + 2 * self.b) * x + self.c


@dataclass(frozen=True)
class ConstrainedMle:
    """Estimates (p1d, p2d) with p1d - p2d = s0, and their complements.

    ``q1d`` and ``q2d`` are stored rather than derived: the closed-form cases
    supply them exactly (e.g. q2d = s0 when p1d = 1), which keeps the null
    variance positive for margins far below machine epsilon.

    ``root`` records which candidate produced the estimate: the index into
    the sorted cubic roots on the general path, or the column of the
    closed-form root table for the extreme cases.  It is ``None`` for the
    pooled zero-margin estimate.
    """

    p1d: float
    p2d: float
    case_tag: CaseTag
    root: int | None = None
    q1d: float = None
    q2d: float = None

    def __post_init__(self):
        if self.q1d is None:
            object.__setattr__(self, "q1d", 1.0 - self.p1d)
        if self.q2d is None:
            object.__setattr__(self, "q2d", 1.0 - self.p2d)


def coefficients(p1, p2, theta, s0) -> CubicCoefficients:
    """Likelihood cubic for plain numbers; exact when given Fractions."""
    a = 1 + theta
    b = -(1 + theta + p1 + theta * p2 + s0 * (theta + 2))
    c = s0 * s0 + s0 * (2 * p1 + theta + 1) + p1 + theta * p2
    d = -p1 * s0 * (1 + s0)
    return CubicCoefficients(a, b, c, d)


def cubic_coefficients(props: Proportions, margin, exact: bool = False) -> CubicCoefficients:
    """Coefficients of the cubic whose roots contain the restricted MLE of p1.

    With ``exact=True`` the coefficients are Fractions computed from the
    integer counts and the binary value of the margin.
    """
    s0 = as_margin(margin).s0
    if exact:
        from fractions import Fraction

        p1, p2, theta = props.exact()
        return coefficients(p1, p2, theta, Fraction(s0))
    return coefficients(props.p_hat1, props.p_hat2, props.theta, float(s0))


def _polish(coeffs: CubicCoefficients, x: float, steps: int = 3) -> float:
    fx = coeffs(x)
    for _ in range(steps):
        if fx == 0.0:
            break
        dfx = coeffs.derivative(x)
        if dfx == 0.0:
            break
        x_new = x - fx / dfx
        f_new = coeffs(x_new)
        if abs(f_new) >= abs(fx):
            break
        x, fx = x_new, f_new
    return x


def solve_cubic_three_real(coeffs) -> tuple[float, float, float]:
    """Three real roots of a*x**3 + b*x**2 + c*x + d, in nondecreasing order.

    Uses the trigonometric (Viete) form.  Arc-cosine arguments that overshoot
    [-1, 1] by at most ``ACOS_CLAMP`` are clamped, which covers double roots
    perturbed by roundoff.  Each root gets a few guarded Newton steps.
    """
    a, b, c, d = (float(v) for v in coeffs)
    if a == 0.0:
        raise NotThreeRealRoots("leading coefficient is zero")
    coeffs = CubicCoefficients(a, b, c, d)
    shift = b / (3.0 * a)
    p = (3.0 * a * c - b * b) / (3.0 * a * a)
    q = (2.0 * b ** 3 - 9.0 * a * b * c + 27.0 * a * a * d) / (27.0 * a ** 3)

    scale = max(1.0, abs(shift), math.sqrt(abs(c / a)), abs(d / a) ** (1.0 / 3.0))
    if p >= -1e-14 * scale * scale:
        if abs(q) <= 1e-12 * scale ** 3:
            x = _polish(coeffs, -shift)
            return (x, x, x)
        raise NotThreeRealRoots(f"depressed cubic has p={p!r}, q={q!r}: one real root")

    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    if arg > 1.0:
        if arg > 1.0 + ACOS_CLAMP:
            raise NotThreeRealRoots(f"arc-cosine argument {arg!r} > 1")
        arg = 1.0
    elif arg < -1.0:
        if arg < -1.0 - ACOS_CLAMP:
            raise NotThreeRealRoots(f"arc-cosine argument {arg!r} < -1")
        arg = -1.0
    phi = math.acos(arg) / 3.0
    roots = [m * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]
    return tuple(sorted(_polish(coeffs, r) for r in roots))


def feasible_interval(s0: float) -> tuple[float, float]:
    """Range of p1d for which both p1d and p1d - s0 are proportions."""
    return max(0.0, s0), min(1.0, 1.0 + s0)


def _xlogy(k, y):
    if k == 0:
        return 0.0
    if y <= 0.0:
        return -math.inf
    return k * math.log(y)


def constrained_log_likelihood(counts: TrialCounts, p1d: float, margin) -> float:
    """Binomial log-likelihood at (p1d, p1d - s0), without the constant term.

    ``0 * log(0)`` counts as 0; a positive count at probability zero gives -inf.
    """
    s0 = float(as_margin(margin).s0)
    p2d = p1d - s0
    return (
        _xlogy(counts.r1, p1d)
        + _xlogy(counts.n1 - counts.r1, 1.0 - p1d)
        + _xlogy(counts.r2, p2d)
        + _xlogy(counts.n2 - counts.r2, 1.0 - p2d)
    )


def _make(p1d, p2d, s0, tag, root, q1d=None, q2d=None):
    lo, hi = feasible_interval(s0)
    p1d = min(max(p1d, lo), hi)
    if p2d is None:
        p2d = p1d - s0
    p2d = min(max(p2d, 0.0), 1.0)
    if q1d is not None:
        q1d, q2d = max(q1d, 0.0), max(q2d, 0.0)
    return ConstrainedMle(p1d, p2d, tag, root, q1d, q2d)


def root_table(p1: int, p2: int, theta: float, s0: float) -> list[tuple[float, float]]:
    """Closed-form roots (p1d, p2d) of the factorised cubic for 0/1 data.

    ``p1`` and ``p2`` are the sample proportions, each 0 or 1.  Columns are
    returned in the order of the factors of each factorisation.
    """
    t = theta
    if (p1, p2) == (1, 1):
        return [(1.0, 1.0 - s0), (1.0 + s0, 1.0), (s0 / (1 + t), -s0 * t / (1 + t))]
    if (p1, p2) == (0, 0):
        return [(0.0, -s0), ((1 + t + s0) / (1 + t), (1 + t - s0 * t) / (1 + t)), (s0, 0.0)]
    if (p1, p2) == (0, 1):
        return [(0.0, -s0), ((t + s0) / (1 + t), (t - s0 * t) / (1 + t)), (1.0 + s0, 1.0)]
    if (p1, p2) == (1, 0):
        return [(s0, 0.0), ((1 + s0) / (1 + t), (1 - s0 * t) / (1 + t)), (1.0, 1.0 - s0)]
    raise ValueError(f"no closed-form table for proportions ({p1}, {p2})")


def _complement_table(p1: int, p2: int, theta: float, s0: float) -> list[tuple[float, float]]:
    # (1 - p1d, 1 - p2d) for each column of root_table, without cancellation
    t = theta
    if (p1, p2) == (1, 1):
        return [(0.0, s0), (-s0, 0.0), ((1 + t - s0) / (1 + t), (1 + t + s0 * t) / (1 + t))]
    if (p1, p2) == (0, 0):
        return [(1.0, 1.0 + s0), (-s0 / (1 + t), s0 * t / (1 + t)), (1.0 - s0, 1.0)]
    if (p1, p2) == (0, 1):
        return [(1.0, 1.0 + s0), ((1 - s0) / (1 + t), (1 + s0 * t) / (1 + t)), (-s0, 0.0)]
    return [(1.0 - s0, 1.0), ((t - s0) / (1 + t), (t + s0 * t) / (1 + t)), (0.0, s0)]


def _best_column(p1: int, p2: int, theta: float, s0: float, tag: CaseTag) -> ConstrainedMle:
    # table entries are exact up to one rounding, so feasibility needs no
    # tolerance; a column only lands on a bound when it duplicates another
    best = None
    columns = zip(root_table(p1, p2, theta, s0), _complement_table(p1, p2, theta, s0))
    for k, ((x, y), (q1, q2)) in enumerate(columns):
        if min(x, y, q1, q2) < 0.0:
            continue
        ll = _xlogy(p1, x) + _xlogy(1 - p1, q1) + theta * (_xlogy(p2, y) + _xlogy(1 - p2, q2))
        if best is None or ll > best[0]:
            # the middle column is a quotient; derive p2d from p1d there
            best = (ll, x, y if k != 1 else None, k, q1, q2)
    if best is None:
        raise NoFeasibleRoot(f"no feasible closed-form root for {tag.value}, theta={theta}, s0={s0}")
    _, x, y, k, q1, q2 = best
    return _make(x, y, s0, tag, k, q1, q2)


def mle_both_ones(theta: float, margin) -> ConstrainedMle:
    """Both sample proportions equal 1: one estimate is 1, the other 1 - |s0|."""
    s0 = float(as_margin(margin).s0)
    return _best_column(1, 1, theta, s0, CaseTag.BOTH_ONES)


def mle_both_zeros(theta: float, margin) -> ConstrainedMle:
    """Both sample proportions equal 0: one estimate is 0, the other |s0|."""
    s0 = float(as_margin(margin).s0)
    return _best_column(0, 0, theta, s0, CaseTag.BOTH_ZEROS)


def mle_zero_one(theta: float, margin) -> ConstrainedMle:
    """p_hat1 = 0 and p_hat2 = 1.

    The stationary point ((theta + s0)/(1 + theta), ...) wins whenever it is
    feasible; otherwise the best feasible table column does.
    """
    s0 = float(as_margin(margin).s0)
    return _best_column(0, 1, theta, s0, CaseTag.ZERO_ONE)


def mle_one_zero(theta: float, margin) -> ConstrainedMle:
    """p_hat1 = 1 and p_hat2 = 0; mirror image of :func:`mle_zero_one`."""
    s0 = float(as_margin(margin).s0)
    return _best_column(1, 0, theta, s0, CaseTag.ONE_ZERO)


def mle_zero_margin(props: Proportions) -> ConstrainedMle:
    """Pooled proportion (r1 + r2)/(n1 + n2) for both arms."""
    c = props.counts
    pooled = (c.r1 + c.r2) / (c.n1 + c.n2)
    return ConstrainedMle(pooled, pooled, CaseTag.ZERO_MARGIN)


def _boundary_roots(props: Proportions, s0: float) -> list[float]:
    roots = []
    if props.p1_is_zero:
        roots.append(0.0)
    if props.p1_is_one:
        roots.append(1.0)
    if props.p2_is_zero:
        roots.append(s0)
    if props.p2_is_one:
        roots.append(1.0 + s0)
    return roots


def mle_general(props: Proportions, margin) -> ConstrainedMle:
    """Solve the cubic, keep feasible roots, return the likelihood maximiser."""
    s0 = float(as_margin(margin).s0)
    coeffs = cubic_coefficients(props, s0)
    roots = list(solve_cubic_three_real(coeffs))
    # a zero count removes one pole of the score and makes the matching
    # boundary an exact root; put it back exactly
    for exact_root in _boundary_roots(props, s0):
        nearest = min(range(3), key=lambda k: abs(roots[k] - exact_root))
        roots[nearest] = exact_root
    lo, hi = feasible_interval(s0)
    best = None
    for k, r in enumerate(roots):
        if not (lo - FEASIBLE_TOL <= r <= hi + FEASIBLE_TOL):
            continue
        x = min(max(r, lo), hi)
        ll = constrained_log_likelihood(props.counts, x, s0)
        if best is None or ll > best[0]:
            best = (ll, x, k)
    if best is None or best[0] == -math.inf:
        raise NoFeasibleRoot(
            f"no feasible root in [{lo}, {hi}] among {roots} for {props.counts}, s0={s0}"
        )
    _, x, k = best
    if lo < x < hi:
        x = _refine_stationary_point(props.counts, x, s0)
    return _make(x, None, s0, CaseTag.GENERAL, k)


def constrained_mle(props, margin) -> ConstrainedMle:
    """Restricted MLE of (p1, p2) under p1 - p2 = s0.

    ``props`` may be :class:`Proportions` or :class:`TrialCounts`.
    """
    if isinstance(props, TrialCounts):
        props = derive_proportions(props)
    margin = as_margin(margin)
    s0 = float(margin.s0)
    theta = props.theta
    if s0 == 0.0:
        return mle_zero_margin(props)
    if props.p1_is_one and props.p2_is_one:
        return mle_both_ones(theta, margin)
    if props.p1_is_zero and props.p2_is_zero:
        return mle_both_zeros(theta, margin)
    if props.p1_is_zero and props.p2_is_one:
        return mle_zero_one(theta, margin)
    if props.p1_is_one and props.p2_is_zero:
        return mle_one_zero(theta, margin)
    return mle_general(props, margin)


def _score(counts: TrialCounts, x: float, s0: float) -> float:
    r1, n1, r2, n2 = counts.r1, counts.n1, counts.r2, counts.n2
    g = 0.0
    if r1:
        g += r1 / x
    if n1 - r1:
        g -= (n1 - r1) / (1.0 - x)
    if r2:
        g += r2 / (x - s0)
    if n2 - r2:
        g -= (n2 - r2) / ((1.0 - x) + s0)
    return g


def _refine_stationary_point(counts: TrialCounts, x: float, s0: float, steps: int = 4) -> float:
    """Newton steps on the score from a cubic root strictly inside the range.

    Near 0 or 1 the cubic's rounding noise swamps the distance to the bound,
    while the score has a pole there and stays well conditioned.
    """
    r1, f1, r2, f2 = counts.r1, counts.n1 - counts.r1, counts.r2, counts.n2 - counts.r2
    lo, hi = feasible_interval(s0)
    g = _score(counts, x, s0)
    for _ in range(steps):
        if g == 0.0:
            break
        u, v = 1.0 - x, x - s0
        slope = -(r1 / x ** 2 + f1 / u ** 2 + r2 / v ** 2 + f2 / (u + s0) ** 2)
        x_new = x - g / slope
        if not lo < x_new < hi:
            break
        g_new = _score(counts, x_new, s0)
        if abs(g_new) >= abs(g):
            break
        x, g = x_new, g_new
    return x


def brute_force_mle(counts: TrialCounts, margin, grid_points: int = 2001) -> ConstrainedMle:
    """Grid search oracle, independent of the cubic.

    Evaluates the log-likelihood on a uniform grid over the feasible range,
    then bisects on the sign of the score inside the bracket around the best
    grid point until it is narrower than 1e-10.  The log-likelihood is
    concave in p1d, so the bracket always holds the maximiser.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be at least 3")
    s0 = float(as_margin(margin).s0)
    lo, hi = feasible_interval(s0)
    step = (hi - lo) / (grid_points - 1)
    grid = [lo + i * step for i in range(grid_points - 1)] + [hi]
    values = [constrained_log_likelihood(counts, x, s0) for x in grid]
    i = max(range(grid_points), key=values.__getitem__)
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    while right - left > 1e-10:
        mid = 0.5 * (left + right)
        if _score(counts, mid, s0) > 0.0:
            left = mid
        else:
            right = mid
    x = 0.5 * (left + right)
    if x - lo < 1e-10:
        x = lo
    elif hi - x < 1e-10:
        x = hi
    return _make(x, None, s0, CaseTag.GENERAL, None)
