"""Bigraded truncated ring: grade bookkeeping, exp/log, truncation congruence."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from microformal import (
    BiSeries,
    DegreeGuardError,
    GaussRat,
    GradingError,
    Poly,
    Truncation,
    TruncationError,
    ValuationError,
    coords,
)

X = coords("x", 2)


def bs(trunc, entries):
    return BiSeries(trunc, X, {mj: Poly(X, terms) for mj, terms in entries.items()})


def lam_x1(trunc):
    """The element l * h^-1 * x1."""
    return BiSeries(trunc, X, {(1, -1): Poly.variable(X, "x1")})


def test_pole_bound_is_enforced_on_construction():
    t = Truncation(2, 2)
    with pytest.raises(GradingError):
        BiSeries(t, X, {(0, -1): Poly.variable(X, "x1")})
    with pytest.raises(GradingError):
        BiSeries(t, X, {(1, -2): Poly.variable(X, "x1")})


def test_square_of_coupling_pole_term_kept_iff_room():
    a2 = lam_x1(Truncation(2, 2))
    sq = a2 * a2
    assert sq == bs(Truncation(2, 2), {(2, -2): {(2, 0): 1}})
    a1 = lam_x1(Truncation(1, 2))
    assert (a1 * a1).is_zero  # coupling grade 2 exceeds M=1


def test_one_is_neutral():
    t = Truncation(3, 3)
    a = bs(t, {(0, 0): {(1, 1): Fraction(2, 3)}, (1, -1): {(2, 0): 1}})
    assert a * BiSeries.one(t, X) == a


def test_truncation_discards_higher_coupling_products():
    t = Truncation(1, 2)
    one = BiSeries.one(t, X)
    a = one + lam_x1(t)
    b = one - lam_x1(t)
    assert a * b == one  # the l^2 term falls outside the ring


def test_exp_term_by_term():
    t = Truncation(2, 2)
    e = lam_x1(t).exp()
    assert e == bs(t, {
        (0, 0): {(0, 0): 1},
        (1, -1): {(1, 0): 1},
        (2, -2): {(2, 0): Fraction(1, 2)},
    })


def test_exp_of_zero():
    t = Truncation(3, 1)
    assert BiSeries.zero(t, X).exp() == BiSeries.one(t, X)


def test_exp_requires_positive_coupling_valuation():
    t = Truncation(2, 2)
    with pytest.raises(ValuationError):
        BiSeries.one(t, X).exp()
    with pytest.raises(ValuationError):
        BiSeries(t, X, {(0, 1): Poly.variable(X, "x1")}).exp()


def test_log_of_one_is_zero():
    t = Truncation(3, 2)
    assert BiSeries.one(t, X).log() == BiSeries.zero(t, X)


def test_log_exp_roundtrip_fixed():
    t = Truncation(3, 2)
    a = BiSeries(t, X, {(1, 0): Poly.variable(X, "x1"),
                        (2, 1): Poly.variable(X, "x2")})
    assert a.exp().log() == a


def test_mercator_series():
    t = Truncation(2, 2)
    a = BiSeries.one(t, X) + lam_x1(t)
    assert a.log() == bs(t, {(1, -1): {(1, 0): 1},
                             (2, -2): {(2, 0): Fraction(-1, 2)}})


def test_log_requires_unit_constant_term():
    t = Truncation(2, 2)
    with pytest.raises(ValuationError):
        bs(t, {(0, 0): {(0, 0): 2}}).log()
    with pytest.raises(ValuationError):
        (BiSeries.one(t, X) + BiSeries.hbar(t, X)).log()


def test_mismatched_truncations_rejected():
    a = BiSeries.one(Truncation(2, 2), X)
    b = BiSeries.one(Truncation(2, 3), X)
    with pytest.raises(TruncationError):
        a * b


def test_degree_guard_is_a_hard_error():
    t = Truncation(2, 2, K=2, D=3)
    p = BiSeries.from_poly(t, Poly(X, {(2, 0): 1}))
    with pytest.raises(DegreeGuardError):
        p * p  # degree 4 exceeds D=3


def test_canonical_rendering():
    t = Truncation(2, 2)
    b = BiSeries(t, X, {(2, -1): Poly(X, {(2, 0): GaussRat(Fraction(3, 2), Fraction(1, 2))})})
    assert b.render() == "l^2*h^-1*(3/2 + 1/2i)*x1^2"
    c = bs(t, {(0, 0): {(1, 0): 1}, (1, 0): {(0, 1): Fraction(1, 2)},
               (1, 1): {(0, 0): -2}})
    assert c.render() == "x1 + l*1/2*x2 - l*h*2"


# -- randomized laws ------------------------------------------------------------

def small_rats():
    return st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def series(draw, trunc=Truncation(3, 3), positive_coupling=False):
    entries = {}
    for _ in range(draw(st.integers(0, 4))):
        m = draw(st.integers(1 if positive_coupling else 0, trunc.M))
        j = draw(st.integers(-m, trunc.J))
        exps = (draw(st.integers(0, 2)), draw(st.integers(0, 2)))
        entries[(m, j)] = Poly(X, {exps: GaussRat(draw(small_rats()), draw(small_rats()))})
    out = BiSeries.zero(trunc, X)
    for mj, p in entries.items():
        out = out + BiSeries(trunc, X, {mj: p})
    return out


@settings(max_examples=40, deadline=None)
@given(series(), series(), series())
def test_multiplication_associative_and_commutative(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a


@settings(max_examples=40, deadline=None)
@given(series(positive_coupling=True), series(positive_coupling=True))
def test_exp_is_a_homomorphism_onto_products(a, b):
    # independent evaluation of both sides
    assert a.exp() * b.exp() == (a + b).exp()


@settings(max_examples=40, deadline=None)
@given(series(positive_coupling=True))
def test_log_inverts_exp(a):
    assert a.exp().log() == a


@settings(max_examples=40, deadline=None)
@given(series(trunc=Truncation(4, 4)), series(trunc=Truncation(4, 4)))
def test_truncation_is_a_ring_congruence(a, b):
    small = Truncation(3, 3)
    assert (a * b).truncate(small) == a.truncate(small) * b.truncate(small)
    assert (a + b).truncate(small) == a.truncate(small) + b.truncate(small)


def test_hbar_regularity_predicate():
    t = Truncation(2, 2)
    assert BiSeries.one(t, X).is_hbar_regular()
    assert not lam_x1(t).is_hbar_regular()


def test_collapse_coupling_sums_by_hbar_grade():
    t = Truncation(2, 2)
    b = bs(t, {(0, 0): {(1, 0): 1}, (2, 0): {(1, 0): 2}, (1, 1): {(0, 0): 1}})
    collapsed = b.collapse_coupling()
    assert collapsed == bs(t, {(0, 0): {(1, 0): 3}, (0, 1): {(0, 0): 1}})
    with pytest.raises(GradingError):
        lam_x1(t).collapse_coupling()
