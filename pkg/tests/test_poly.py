"""Polynomial arithmetic, parsing, and reflection tests."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscdecay2d.poly import BivariatePoly, PolyError, parse_poly
from oscdecay2d.series import FractionalSeries


def test_parse_basic():
    p = parse_poly("y^2 - x^3")
    assert p.support() == [(F(0), F(2)), (F(3), F(0))]
    assert p(2.0, 3.0) == pytest.approx(9 - 8)


def test_parse_rational_exponent():
    p = parse_poly("x^(3/2) + 2*x*y")
    assert (F(3, 2), F(0)) in p.support()
    assert p(4.0, 0.0) == pytest.approx(8.0)


def test_parse_combines_like_terms():
    assert parse_poly("x + x") == parse_poly("2*x")


def test_parse_zero_rejected():
    with pytest.raises(PolyError):
        parse_poly("x - x")


def test_parse_garbage_rejected():
    for bad in ("", "x +", "x^", "z", "x^(1/0)", "3^2", "x*(y+1)"):
        with pytest.raises(PolyError):
            parse_poly(bad)


def test_duplicate_monomial_rejected():
    with pytest.raises(PolyError):
        BivariatePoly([(1, 0, 1), (1, 0, 2)])


def test_expr_round_trip():
    for text in ("y^2 - x^3", "x*y", "7 + x", "x^(3/2) + 2*x*y - y^4"):
        p = parse_poly(text)
        assert parse_poly(p.expr()) == p


def test_partial_derivatives():
    p = parse_poly("x^2*y^3")
    d = p.partial(1, 2)
    # d/dx d2/dy2 x^2 y^3 = 2x * 6y = 12 x y
    assert d(2.0, 3.0) == pytest.approx(12 * 2 * 3)


def test_partial_fractional():
    p = parse_poly("x^(3/2)")
    d = p.partial(1, 0)
    assert d(4.0, 0.0) == pytest.approx(1.5 * 2.0)


def test_shift_y_exact_cancellation():
    f = parse_poly("y^2 - x^3")
    k = FractionalSeries([(F(3, 2), F(1))])
    shifted = f.shift_y(k, 1)
    # (y + x^{3/2})^2 - x^3 = y^2 + 2 x^{3/2} y
    assert shifted == BivariatePoly([(0, 2, 1), (F(3, 2), 1, 2)])


def test_shift_y_negative_sign():
    f = parse_poly("y - x^2")
    k = FractionalSeries([(F(2), F(2))])
    shifted = f.shift_y(k, -1)  # f(x, 2x^2 - y) = x^2 - y
    assert shifted == BivariatePoly([(0, 1, -1), (2, 0, 1)])


def test_reflection():
    f = parse_poly("y^2 - x^3")
    g = f.reflected(-1, 1, False)  # f(-x, y) = y^2 + x^3
    assert g == parse_poly("y^2 + x^3")
    h = f.reflected(1, 1, True)  # f(Y, X): swap names
    assert h == parse_poly("x^2 - y^3")


def test_leading_form():
    assert parse_poly("y^2 - x^3").leading_form() == parse_poly("y^2")
    assert parse_poly("x + y + x^2").leading_form() == parse_poly("x + y")
    assert parse_poly("7 + x").leading_form() == parse_poly("7")


def test_evaluate_vectorized():
    p = parse_poly("x*y - y^2")
    x = np.array([1.0, 2.0])
    y = np.array([3.0, 0.5])
    np.testing.assert_allclose(p(x, y), x * y - y * y)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5),
                          st.integers(-9, 9)), min_size=1, max_size=6))
def test_from_sum_never_crashes(terms):
    p = BivariatePoly.from_sum(terms)
    # evaluation agrees with direct summation
    val = sum(c * 1.5 ** i * 0.7 ** j for i, j, c in terms)
    assert p(1.5, 0.7) == pytest.approx(val, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.text(max_size=40))
def test_parse_poly_total(text):
    """Fuzzed strings either parse or raise PolyError, never crash."""
    try:
        parse_poly(text)
    except PolyError:
        pass
