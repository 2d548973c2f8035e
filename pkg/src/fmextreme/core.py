"""Domain types and validation shared by the estimation, testing and CI code."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

__all__ = [
    "FMError",
    "InputError",
    "NumericalError",
    "InvalidCounts",
    "InvalidMargin",
    "TrialCounts",
    "Proportions",
    "Margin",
    "validate_counts",
    "derive_proportions",
    "as_margin",
]


class FMError(Exception):
    """Base class for every error raised by this package."""


class InputError(FMError, ValueError):
    """Malformed user input."""


class NumericalError(FMError, ArithmeticError):
    """A computation could not produce a meaningful number."""


class InvalidCounts(InputError):
    pass


class InvalidMargin(InputError):
    pass


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


@dataclass(frozen=True)
class TrialCounts:
    """Responders and group sizes of a two-arm binomial trial."""

    r1: int
    n1: int
    r2: int
    n2: int

    def __post_init__(self):
        for name in ("r1", "n1", "r2", "n2"):
            if not _is_int(getattr(self, name)):
                raise InvalidCounts(f"{name} must be an integer, got {getattr(self, name)!r}")
        if self.n1 < 1 or self.n2 < 1:
            raise InvalidCounts(f"group sizes must be positive, got n1={self.n1}, n2={self.n2}")
        if not 0 <= self.r1 <= self.n1:
            raise InvalidCounts(f"r1={self.r1} outside [0, n1={self.n1}]")
        if not 0 <= self.r2 <= self.n2:
            raise InvalidCounts(f"r2={self.r2} outside [0, n2={self.n2}]")

    def swapped(self) -> TrialCounts:
        """Counts with the two arms exchanged."""
        return TrialCounts(self.r2, self.n2, self.r1, self.n1)

    @property
    def difference(self) -> float:
        return self.r1 / self.n1 - self.r2 / self.n2


@dataclass(frozen=True)
class Proportions:
    """Sample proportions and the group-size ratio, kept next to their counts.

    Extreme-case checks go through ``counts`` (integer equality), never
    through the floating point proportions.
    """

    p_hat1: float
    p_hat2: float
    theta: float
    counts: TrialCounts

    @property
    def p1_is_zero(self) -> bool:
        return self.counts.r1 == 0

    @property
    def p1_is_one(self) -> bool:
        return self.counts.r1 == self.counts.n1

    @property
    def p2_is_zero(self) -> bool:
        return self.counts.r2 == 0

    @property
    def p2_is_one(self) -> bool:
        return self.counts.r2 == self.counts.n2

    def exact(self) -> tuple[Fraction, Fraction, Fraction]:
        """(p_hat1, p_hat2, theta) as exact rationals."""
        c = self.counts
        return Fraction(c.r1, c.n1), Fraction(c.r2, c.n2), Fraction(c.n2, c.n1)


@dataclass(frozen=True)
class Margin:
    """Null-hypothesis difference p1 - p2, restricted to the open interval (-1, 1)."""

    s0: float

    def __post_init__(self):
        s0 = self.s0
        if isinstance(s0, bool) or not isinstance(s0, Real):
            raise InvalidMargin(f"margin must be a real number, got {s0!r}")
        if not -1 < s0 < 1:
            raise InvalidMargin(f"margin {s0!r} outside the open interval (-1, 1)")

    def __float__(self) -> float:
        return float(self.s0)

    def __neg__(self) -> Margin:
        return Margin(-self.s0)


def as_margin(s0) -> Margin:
    if isinstance(s0, Margin):
        return s0
    return Margin(s0)


def validate_counts(r1, n1, r2, n2) -> TrialCounts:
    """Build a :class:`TrialCounts` from raw input, raising ``InvalidCounts``."""
    return TrialCounts(r1, n1, r2, n2)


def derive_proportions(counts: TrialCounts) -> Proportions:
    # int / int is correctly rounded, so p_hat is the nearest double to r/n
    return Proportions(
        p_hat1=counts.r1 / counts.n1,
        p_hat2=counts.r2 / counts.n2,
        theta=counts.n2 / counts.n1,
        counts=counts,
    )
