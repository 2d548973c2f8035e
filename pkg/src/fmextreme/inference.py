"""Score test for the difference of two binomial proportions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from .core import InputError, NumericalError, TrialCounts, as_margin, derive_proportions
from .mle import ConstrainedMle, constrained_mle

__all__ = [
    "DegenerateVariance",
    "DegenerateTable",
    "OutOfDomain",
    "TestResult",
    "null_variance",
    "z_statistic",
    "chi_squared_stat",
    "normal_cdf",
    "normal_quantile",
]

_STD_NORMAL = NormalDist()


class DegenerateVariance(NumericalError):
    """Null variance is zero while the observed difference is off the margin."""

    def __init__(self, message, numerator=0.0):
        super().__init__(message)
        self.numerator = numerator


class DegenerateTable(NumericalError):
    pass


class OutOfDomain(InputError):
    pass


@dataclass(frozen=True)
class TestResult:
    z: float
    v0: float
    p_lower: float
    p_upper: float
    p_two_sided: float
    mle: ConstrainedMle

    __test__ = False  # not a pytest class


def normal_cdf(x: float) -> float:
    """Standard normal P(Z <= x), via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Inverse of :func:`normal_cdf` on the open interval (0, 1)."""
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"probability {p!r} outside (0, 1)")
    return _STD_NORMAL.inv_cdf(p)


def null_variance(mle: ConstrainedMle, counts: TrialCounts) -> float:
    """Variance of p_hat1 - p_hat2 evaluated at the restricted estimates."""
    return mle.p1d * mle.q1d / counts.n1 + mle.p2d * mle.q2d / counts.n2


def z_statistic(counts: TrialCounts, margin) -> TestResult:
    """Farrington-Manning z = (p_hat1 - p_hat2 - s0) / sqrt(v0).

    Positive z means the observed difference exceeds the margin.  A zero
    variance gives z = 0 when the numerator is also zero and raises
    ``DegenerateVariance`` otherwise.
    """
    margin = as_margin(margin)
    props = derive_proportions(counts)
    mle = constrained_mle(props, margin)
    v0 = null_variance(mle, counts)
    numerator = props.p_hat1 - props.p_hat2 - float(margin.s0)
    if v0 > 0.0:
        z = numerator / math.sqrt(v0)
    elif numerator == 0.0:
        z = 0.0
    else:
        raise DegenerateVariance(
            f"null variance is zero for {counts} at s0={margin.s0}", numerator
        )
    p_lower = normal_cdf(z)
    p_upper = normal_cdf(-z)
    return TestResult(
        z=z,
        v0=v0,
        p_lower=p_lower,
        p_upper=p_upper,
        p_two_sided=min(1.0, 2.0 * min(p_lower, p_upper)),
        mle=mle,
    )


def chi_squared_stat(counts: TrialCounts) -> float:
    """Pearson X**2 of the 2x2 responder table, no continuity correction."""
    r1, n1, r2, n2 = counts.r1, counts.n1, counts.r2, counts.n2
    total = n1 + n2
    responders = r1 + r2
    failures = total - responders
    if responders == 0 or failures == 0:
        raise DegenerateTable(f"pooled proportion is {responders}/{total}")
    observed = ((r1, n1 - r1), (r2, n2 - r2))
    x2 = 0.0
    for row, n in zip(observed, (n1, n2)):
        for obs, col in zip(row, (responders, failures)):
            expected = n * col / total
            x2 += (obs - expected) ** 2 / expected
    return x2
