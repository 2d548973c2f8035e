"""Confidence intervals for p1 - p2 by inverting the two-sided score test."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import InputError, NumericalError, TrialCounts
from .inference import DegenerateVariance, normal_quantile, z_statistic

__all__ = [
    "EndpointMethod",
    "ConfidenceInterval",
    "BracketingFailure",
    "WrongCase",
    "critical_value",
    "ci_both_extreme_closed_form",
    "confidence_interval",
]

EPS = 1e-9
XTOL = 1e-10
MAX_ITER = 200


class EndpointMethod(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    BISECTION = "Bisection"
    BOUNDARY = "Boundary"

    def __str__(self):
        return self.value


class BracketingFailure(NumericalError):
    def __init__(self, message, bracket):
        super().__init__(f"{message}; scanned bracket {bracket}")
        self.bracket = bracket


class WrongCase(InputError):
    pass


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method_lower: EndpointMethod
    method_upper: EndpointMethod

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper


def critical_value(level: float) -> float:
    """Two-sided critical value, e.g. 1.95996... for level 0.95."""
    if not 0.0 < level < 1.0:
        raise InputError(f"confidence level {level!r} outside (0, 1)")
    return normal_quantile(1.0 - (1.0 - level) / 2.0)


def ci_both_extreme_closed_form(counts: TrialCounts, level: float) -> ConfidenceInterval:
    """Closed-form interval when both arms are all responders or both have none.

    All responders gives (-z**2/(n1 + z**2), z**2/(n2 + z**2)); no responders
    is the mirror image with n1 and n2 exchanged.
    """
    z2 = critical_value(level) ** 2
    n1, n2 = counts.n1, counts.n2
    if counts.r1 == n1 and counts.r2 == n2:
        lower, upper = -z2 / (n1 + z2), z2 / (n2 + z2)
    elif counts.r1 == 0 and counts.r2 == 0:
        lower, upper = -z2 / (n2 + z2), z2 / (n1 + z2)
    else:
        raise WrongCase(f"{counts} is neither all-responder nor no-responder in both arms")
    m = EndpointMethod.CLOSED_FORM
    return ConfidenceInterval(lower, upper, level, m, m)


def _z(counts: TrialCounts, s0: float) -> float:
    try:
        return z_statistic(counts, s0).z
    except DegenerateVariance as exc:
        return math.copysign(math.inf, exc.numerator)


def _find_endpoint(counts, estimate, z_crit, direction):
    """Bisect for the margin where z crosses -direction * z_crit.

    ``direction`` is +1 for the upper limit (search towards 1) and -1 for the
    lower limit.  At the estimate z is 0, which anchors one end of the bracket.
    """

    def g(s):
        return direction * _z(counts, s) + z_crit

    eps = EPS
    while True:
        far = direction * (1.0 - eps)
        if direction * (far - estimate) > 0 and g(far) < 0.0:
            break
        eps /= 10.0
        if 1.0 - eps == 1.0:
            raise BracketingFailure(
                f"no sign change for {counts} at critical value {z_crit}",
                tuple(sorted((estimate, far))),
            )
    near = estimate  # g(near) = z_crit > 0, never evaluated: near may be +-1
    for _ in range(MAX_ITER):
        if abs(far - near) <= XTOL:
            break
        mid = 0.5 * (near + far)
        if g(mid) < 0.0:
            far = mid
        else:
            near = mid
    return 0.5 * (near + far)


def confidence_interval(counts: TrialCounts, level: float = 0.95) -> ConfidenceInterval:
    """Set of margins s0 not rejected by the two-sided test at ``level``."""
    z_crit = critical_value(level)
    r1, n1, r2, n2 = counts.r1, counts.n1, counts.r2, counts.n2
    if (r1 == n1 and r2 == n2) or (r1 == 0 and r2 == 0):
        return ci_both_extreme_closed_form(counts, level)

    estimate = r1 / n1 - r2 / n2
    bis, bnd = EndpointMethod.BISECTION, EndpointMethod.BOUNDARY
    if r1 == 0 and r2 == n2:
        upper = _find_endpoint(counts, estimate, z_crit, +1)
        return ConfidenceInterval(-1.0, upper, level, bnd, bis)
    if r1 == n1 and r2 == 0:
        lower = _find_endpoint(counts, estimate, z_crit, -1)
        return ConfidenceInterval(lower, 1.0, level, bis, bnd)
    lower = _find_endpoint(counts, estimate, z_crit, -1)
    upper = _find_endpoint(counts, estimate, z_crit, +1)
    return ConfidenceInterval(lower, upper, level, bis, bis)
