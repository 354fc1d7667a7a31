"""Coefficient field and polynomial ring: exactness, canonical form, calculus."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from microformal import Context, ContextError, GaussRat, I, Poly, coords


@pytest.fixture
def xy():
    return coords("x", 2)


def rat(a, b=1):
    return Fraction(a, b)


# -- GaussRat ------------------------------------------------------------------

def test_imaginary_unit_squares_to_minus_one():
    assert I * I == GaussRat(-1)


def test_gaussrat_division_roundtrip():
    a = GaussRat(rat(3, 4), rat(-2, 5))
    b = GaussRat(rat(1, 7), rat(9))
    assert (a / b) * b == a


def test_gaussrat_str_forms():
    assert str(GaussRat(rat(3, 2))) == "3/2"
    assert str(GaussRat(0, 1)) == "i"
    assert str(GaussRat(0, rat(1, 2))) == "1/2i"
    assert str(GaussRat(rat(3, 2), rat(1, 2))) == "(3/2 + 1/2i)"
    assert str(GaussRat(rat(3, 2), -1)) == "(3/2 - i)"


def test_gaussrat_power_and_negative_power_rejected():
    assert GaussRat(0, 1) ** 4 == GaussRat(1)
    with pytest.raises(ValueError):
        GaussRat(2) ** -1


# -- polynomial arithmetic -------------------------------------------------------

def test_difference_of_squares(xy):
    x1 = Poly.variable(xy, "x1")
    one = Poly.const(xy, 1)
    assert (x1 + one) * (x1 - one) == x1 * x1 - one


def test_multiplication_by_zero_empties_term_map(xy):
    p = Poly(xy, {(2, 1): rat(3, 7), (0, 0): 5})
    z = p * Poly.zero(xy)
    assert z.is_zero and z.terms == {}


def test_conjugate_coefficients_sum_to_real(xy):
    x1 = Poly.variable(xy, "x1")
    p = x1 * GaussRat(rat(1, 2), 1) + x1 * GaussRat(rat(1, 2), -1)
    assert p == x1


def test_power_rule():
    yctx = coords("y", 2)
    p = Poly(yctx, {(2, 1): 1})  # y1^2 y2
    assert p.diff("y1") == Poly(yctx, {(1, 1): 2})


def test_derivative_of_constant_is_zero():
    yctx = coords("y", 1)
    assert Poly.const(yctx, rat(5, 3)).diff("y1").is_zero


def test_repeated_derivative_matches_one_shot_second_derivative():
    # oracle: differentiate y1^3/6 twice step by step, and in one pass
    yctx = coords("y", 1)
    p = Poly(yctx, {(3,): rat(1, 6)})
    twice = p.diff("y1").diff("y1")
    one_shot = Poly(yctx, {(1,): 1})  # d2/dy2 of y^3/6 = y
    assert twice == one_shot == Poly.variable(yctx, "y1")


def test_substitute_square(xy):
    yctx = coords("y", 1)
    p = Poly(yctx, {(2,): 1})
    image = Poly.variable(xy, "x1") + Poly.const(xy, 1)
    assert p.substitute({"y1": image}) == Poly(xy, {(2, 0): 1, (1, 0): 2, (0, 0): 1})


def test_identity_substitution(xy):
    p = Poly(xy, {(2, 1): rat(5, 2), (1, 0): -3})
    images = {n: Poly.variable(xy, n) for n in xy.names}
    assert p.substitute(images) == p


def test_substitute_product_of_images(xy):
    yctx = coords("y", 2)
    p = Poly(yctx, {(1, 1): 1})  # y1 y2
    x1 = Poly.variable(xy, "x1")
    assert p.substitute({"y1": x1 * x1, "y2": -x1}) == Poly(xy, {(3, 0): -1})


def test_missing_image_for_live_variable_raises(xy):
    yctx = coords("y", 2)
    p = Poly(yctx, {(1, 1): 1})
    with pytest.raises(ContextError):
        p.substitute({"y1": Poly.variable(xy, "x1")})


def test_mismatched_contexts_raise(xy):
    other = coords("y", 2)
    with pytest.raises(ContextError):
        Poly.variable(xy, "x1") + Poly.variable(other, "y1")
    with pytest.raises(ContextError):
        Poly.variable(xy, "x1").diff("z9")


def test_nilpotent_cap_squares_to_zero(xy):
    ctx = xy.extend("eps", cap=1)
    eps = Poly.variable(ctx, "eps")
    assert (eps * eps).is_zero
    p = (Poly.variable(ctx, "x1") + eps) ** 3
    assert p.coeff_of("eps", 1) == Poly(xy, {(2, 0): 3})


# -- randomized ring laws ---------------------------------------------------------

def small_rats():
    return st.fractions(min_value=-4, max_value=4, max_denominator=5)


@st.composite
def polys(draw, ctx=coords("x", 2), max_terms=4, max_degree=3):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exps = tuple(draw(st.integers(0, max_degree)) for _ in range(len(ctx)))
        terms[exps] = GaussRat(draw(small_rats()), draw(small_rats()))
    return Poly(ctx, terms)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c


@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_substitution_is_a_ring_homomorphism(a, b):
    tgt = coords("z", 2)
    z1 = Poly.variable(tgt, "z1")
    z2 = Poly.variable(tgt, "z2")
    images = {"x1": z1 + z2, "x2": z1 * z2 - Poly.const(tgt, 2)}
    assert (a * b).substitute(images, tgt) == a.substitute(images, tgt) * b.substitute(images, tgt)
    assert (a + b).substitute(images, tgt) == a.substitute(images, tgt) + b.substitute(images, tgt)


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_leibniz_rule(a, b):
    assert (a * b).diff("x1") == a.diff("x1") * b + a * b.diff("x1")


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), polys())
def test_equal_polynomials_print_identically(a, b, c):
    lhs = (a + b) * c
    rhs = c * b + c * a
    assert lhs == rhs
    assert str(lhs) == str(rhs)


def test_canonical_print_order(xy):
    p = Poly(xy, {(0, 0): 1, (2, 0): 1, (1, 1): 1, (0, 1): rat(-1, 2)})
    assert str(p) == "x1^2 + x1*x2 - 1/2*x2 + 1"


def test_context_embedding_and_projection(xy):
    joint = xy.union(coords("y", 1))
    p = Poly(xy, {(1, 2): rat(7, 3)})
    q = p.embed(joint)
    assert q.project(xy) == p
    bad = q * Poly.variable(joint, "y1")
    with pytest.raises(ContextError):
        bad.project(xy)
