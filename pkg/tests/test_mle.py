import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fmextreme.core import TrialCounts, derive_proportions
from fmextreme.mle import (
    CaseTag,
    CubicCoefficients,
    NotThreeRealRoots,
    brute_force_mle,
    coefficients,
    constrained_log_likelihood,
    constrained_mle,
    cubic_coefficients,
    feasible_interval,
    mle_both_ones,
    mle_both_zeros,
    mle_general,
    mle_one_zero,
    mle_zero_margin,
    mle_zero_one,
    root_table,
    solve_cubic_three_real,
)

from strategies import margins, trial_counts

THETAS = [0.25, 0.5, 1.0, 2.0, 4.0]
MARGINS = [0.1, -0.1, 0.3, -0.3, 0.5, -0.5, 0.8, -0.8]


def expand(*factors):
    """Multiply linear factors (k, m) meaning k*x + m; returns (a, b, c, d)."""
    poly = [Fraction(1)]  # highest degree first
    for k, m in factors:
        out = [Fraction(0)] * (len(poly) + 1)
        for i, coef in enumerate(poly):
            out[i] += coef * k
            out[i + 1] += coef * m
        poly = out
    return tuple(poly)


def factored(p1, p2, t, s):
    one = Fraction(1)
    return {
        (1, 1): expand((one, -one), (one, -(1 + s)), (1 + t, -s)),
        (0, 0): expand((one, 0), (one, -s), (1 + t, -(1 + t + s))),
        (0, 1): expand((one, 0), (one, -(1 + s)), (1 + t, -(t + s))),
        (1, 0): expand((one, -one), (one, -s), (1 + t, -(1 + s))),
    }[(p1, p2)]


# -- coefficients -----------------------------------------------------------

def test_coefficients_irreducible_example():
    props = derive_proportions(TrialCounts(1, 3, 1, 2))
    exact = cubic_coefficients(props, 0.5, exact=True)
    assert exact == (Fraction(5, 3), Fraction(-11, 3), Fraction(25, 12), Fraction(-1, 4))
    assert tuple(12 * v for v in exact) == (20, -44, 25, -3)
    assert_allclose(cubic_coefficients(props, 0.5), [5 / 3, -11 / 3, 25 / 12, -0.25], rtol=1e-15)


def test_coefficients_both_ones():
    props = derive_proportions(TrialCounts(10, 10, 10, 10))
    assert_allclose(cubic_coefficients(props, 0.2), [2, -4.6, 2.84, -0.24], rtol=1e-15)
    assert cubic_coefficients(props, 0.2, exact=True) == expand(
        (1, -1), (1, -Fraction(0.2) - 1), (2, -Fraction(0.2)))


def test_coefficients_all_zero():
    props = derive_proportions(TrialCounts(0, 10, 0, 10))
    assert cubic_coefficients(props, 0.0) == (2, -2, 0, 0)


@pytest.mark.parametrize("theta", [Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4)])
@pytest.mark.parametrize("s0", MARGINS)
@pytest.mark.parametrize("p1, p2", [(1, 1), (0, 0), (0, 1), (1, 0)])
def test_factorisation_identity_exact(p1, p2, theta, s0):
    s = Fraction(s0)
    assert coefficients(Fraction(p1), Fraction(p2), theta, s) == factored(p1, p2, theta, s)


@given(st.fractions(0, 1), st.fractions(0, 1), st.fractions(Fraction(1, 100), 100))
def test_zero_margin_factorisation(p1, p2, theta):
    target = expand((1, 0), (1, -1), (1 + theta, -(p1 + theta * p2)))
    assert coefficients(p1, p2, theta, Fraction(0)) == target


@pytest.mark.parametrize("theta", THETAS)
@pytest.mark.parametrize("s0", MARGINS)
@pytest.mark.parametrize("p1, p2", [(1, 1), (0, 0), (0, 1), (1, 0)])
def test_root_table_entries_are_roots(p1, p2, theta, s0):
    cubic = coefficients(p1, p2, theta, s0)
    for x, y in root_table(p1, p2, theta, s0):
        assert abs(cubic(x)) <= 1e-12
        assert x - y == pytest.approx(s0, abs=1e-15)


# -- cubic solver -----------------------------------------------------------

def test_solve_factorised_both_ones():
    assert_allclose(solve_cubic_three_real((2, -4.6, 2.84, -0.24)), [0.1, 1.0, 1.2], atol=1e-12)


def test_solve_triple_root():
    assert solve_cubic_three_real((1, -3, 3, -1)) == (1.0, 1.0, 1.0)


def test_solve_double_root():
    # (x - 1)**2 (x - 2)
    assert_allclose(solve_cubic_three_real((1, -4, 5, -2)), [1, 1, 2], atol=1e-7)


def test_solve_irreducible():
    roots = solve_cubic_three_real((20, -44, 25, -3))
    cubic = CubicCoefficients(20, -44, 25, -3)
    assert list(roots) == sorted(roots)
    for r in roots:
        assert abs(cubic(r)) <= 1e-9
    # no rational root among +-m/n, m | 3, n | 20
    candidates = {Fraction(m, n) for m in (1, 3) for n in (1, 2, 4, 5, 10, 20)}
    assert all(20 * c**3 - 44 * c**2 + 25 * c - 3 != 0 for c in candidates | {-c for c in candidates})


def test_solve_one_real_root_raises():
    with pytest.raises(NotThreeRealRoots):
        solve_cubic_three_real((1, 0, 1, 1))


def test_solve_acos_regression():
    # p_hat1 = 0, p_hat2 = 1, theta = 2, s0 = 0.5
    roots = solve_cubic_three_real(coefficients(0.0, 1.0, 2.0, 0.5))
    assert not any(math.isnan(r) for r in roots)
    assert_allclose(roots, [0.0, 5 / 6, 1.5], atol=1e-12)


@given(trial_counts(), margins)
def test_solver_never_nan_on_likelihood_cubics(counts, s0):
    roots = solve_cubic_three_real(cubic_coefficients(derive_proportions(counts), s0))
    assert not any(math.isnan(r) for r in roots)


# -- closed-form cases ------------------------------------------------------

@pytest.mark.parametrize("func, theta, s0, expected", [
    (mle_both_ones, 1, 0.2, (1.0, 0.8)),
    (mle_both_ones, 2, -0.3, (0.7, 1.0)),
    (mle_both_ones, 5, 0.2, (1.0, 0.8)),
    (mle_both_zeros, 1, 0.2, (0.2, 0.0)),
    (mle_both_zeros, 0.5, -0.3, (0.0, 0.3)),
    (mle_both_zeros, 3, 0.2, (0.2, 0.0)),
    (mle_zero_one, 2, 0.5, (5 / 6, 1 / 3)),
    (mle_zero_one, 0.5, -0.5, (0.0, 0.5)),
    (mle_zero_one, 0.5, -0.8, (0.0, 0.8)),
    (mle_one_zero, 1, 0.5, (0.75, 0.25)),
    (mle_one_zero, 2, 0.5, (0.5, 0.0)),
    (mle_one_zero, 4, 0.5, (0.5, 0.0)),
])
def test_closed_form_cases(func, theta, s0, expected):
    mle = func(theta, s0)
    assert_allclose((mle.p1d, mle.p2d), expected, atol=1e-12)


def test_one_zero_likelihood_comparison():
    # theta = 4, s0 = 0.5: compare the two feasible columns directly
    counts = TrialCounts(10, 10, 0, 40)
    at_s0 = constrained_log_likelihood(counts, 0.5, 0.5)
    at_one = constrained_log_likelihood(counts, 1.0, 0.5)
    assert at_s0 > at_one


@pytest.mark.parametrize("theta, s0", [(2, -0.8), (0.25, 0.5), (0.5, 0.9)])
def test_extreme_cases_stay_feasible_beyond_the_stationary_point(theta, s0):
    # the stationary column leaves [0, 1] here; the boundary column wins
    for func in (mle_zero_one, mle_one_zero):
        mle = func(theta, s0)
        lo, hi = feasible_interval(s0)
        assert lo <= mle.p1d <= hi and 0 <= mle.p2d <= 1


@pytest.mark.parametrize("counts, expected", [
    (TrialCounts(3, 10, 7, 10), 0.5),
    (TrialCounts(0, 10, 0, 20), 0.0),
    (TrialCounts(1, 3, 1, 2), 0.4),
])
def test_zero_margin(counts, expected):
    mle = mle_zero_margin(derive_proportions(counts))
    assert (mle.p1d, mle.p2d, mle.case_tag) == (expected, expected, CaseTag.ZERO_MARGIN)


def test_dispatch():
    assert constrained_mle(TrialCounts(10, 10, 10, 10), 0.2).case_tag is CaseTag.BOTH_ONES
    assert constrained_mle(TrialCounts(0, 10, 0, 10), 0.2).case_tag is CaseTag.BOTH_ZEROS
    assert constrained_mle(TrialCounts(0, 10, 20, 20), 0.5).case_tag is CaseTag.ZERO_ONE
    assert constrained_mle(TrialCounts(10, 10, 0, 20), 0.5).case_tag is CaseTag.ONE_ZERO
    assert constrained_mle(TrialCounts(5, 10, 5, 10), 0).case_tag is CaseTag.ZERO_MARGIN
    assert constrained_mle(TrialCounts(10, 10, 10, 10), 0).case_tag is CaseTag.ZERO_MARGIN
    assert constrained_mle(TrialCounts(9, 10, 10, 10), 0.2).case_tag is CaseTag.GENERAL
    mle = constrained_mle(TrialCounts(10, 10, 10, 10), 0.2)
    assert (mle.p1d, mle.p2d) == (1.0, 0.8)


def test_general_against_oracle_example():
    counts = TrialCounts(30, 50, 20, 50)
    mle = constrained_mle(counts, 0.1)
    assert mle.case_tag is CaseTag.GENERAL
    assert abs(mle.p1d - brute_force_mle(counts, 0.1).p1d) <= 1e-6


# -- likelihood and oracle --------------------------------------------------

def test_log_likelihood_values():
    assert constrained_log_likelihood(TrialCounts(50, 50, 50, 50), 1.0, 0.2) == pytest.approx(
        -11.157177565710488, abs=1e-12)
    assert constrained_log_likelihood(TrialCounts(0, 10, 0, 10), 0.0, 0.0) == 0.0
    assert constrained_log_likelihood(TrialCounts(5, 10, 5, 10), 0.0, 0.2) == -math.inf


def test_brute_force_examples():
    mle = brute_force_mle(TrialCounts(50, 50, 50, 50), 0.2)
    assert_allclose((mle.p1d, mle.p2d), (1.0, 0.8), atol=1e-10)

    mle = brute_force_mle(TrialCounts(0, 10, 10, 10), 0.5)
    assert_allclose((mle.p1d, mle.p2d), (0.75, 0.25), atol=1e-9)

    counts = TrialCounts(10, 30, 10, 20)
    roots = solve_cubic_three_real((20, -44, 25, -3))
    lo, hi = feasible_interval(0.5)
    feasible = [r for r in roots if lo <= r <= hi]
    best = max(feasible, key=lambda r: constrained_log_likelihood(counts, r, 0.5))
    assert abs(brute_force_mle(counts, 0.5).p1d - best) <= 1e-8
    assert constrained_mle(counts, 0.5).p1d == pytest.approx(best, abs=1e-12)


def test_brute_force_grid_points():
    with pytest.raises(ValueError):
        brute_force_mle(TrialCounts(1, 2, 1, 2), 0.1, grid_points=2)


# -- properties -------------------------------------------------------------

@settings(max_examples=300)
@given(trial_counts(), margins)
def test_mle_feasible_and_consistent(counts, s0):
    mle = constrained_mle(counts, s0)
    lo, hi = feasible_interval(s0)
    assert lo <= mle.p1d <= hi
    assert 0.0 <= mle.p2d <= 1.0
    assert abs((mle.p1d - mle.p2d) - s0) <= 4 * math.ulp(1.0)


@settings(max_examples=300)
@given(trial_counts(), margins)
def test_general_cubic_residual(counts, s0):
    mle = constrained_mle(counts, s0)
    if mle.case_tag is CaseTag.GENERAL:
        cubic = cubic_coefficients(derive_proportions(counts), s0)
        assert abs(cubic(mle.p1d)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(trial_counts(), margins)
def test_matches_brute_force(counts, s0):
    assert abs(constrained_mle(counts, s0).p1d - brute_force_mle(counts, s0).p1d) <= 1e-6


@pytest.mark.parametrize("n1, n2", [(10, 10), (7, 20), (40, 9)])
@pytest.mark.parametrize("s0", MARGINS)
def test_general_path_near_extremes(n1, n2, s0):
    # one step away from an extreme case the general path is used and agrees
    # with the oracle; at the extreme itself it agrees with the closed form
    extremes = [(n1, n2), (0, 0), (0, n2), (n1, 0)]
    for r1, r2 in extremes:
        exact = TrialCounts(r1, n1, r2, n2)
        near = TrialCounts(r1 - 1 if r1 else 1, n1, r2, n2)
        mle_near = constrained_mle(near, s0)
        assert mle_near.case_tag is CaseTag.GENERAL
        assert abs(mle_near.p1d - brute_force_mle(near, s0).p1d) <= 1e-6
        closed = constrained_mle(exact, s0)
        try:
            general = mle_general(derive_proportions(exact), s0)
        except ArithmeticError:
            continue
        assert abs(general.p1d - closed.p1d) <= 1e-9


def test_continuity_towards_both_ones():
    s0 = 0.2
    closed = constrained_mle(TrialCounts(1000, 1000, 1000, 1000), s0).p1d
    gaps = [abs(constrained_mle(TrialCounts(1000 - k, 1000, 1000, 1000), s0).p1d - closed)
            for k in (64, 16, 4, 1)]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-2


def test_general_grid_all_sign_combinations():
    for (r1, r2), s0 in itertools.product([(3, 17), (19, 1), (10, 10)], MARGINS):
        counts = TrialCounts(r1, 20, r2, 20)
        assert abs(constrained_mle(counts, s0).p1d - brute_force_mle(counts, s0).p1d) <= 1e-6
