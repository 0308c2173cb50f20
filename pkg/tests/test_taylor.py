"""Series arithmetic checked against numpy polynomials and known expansions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexlink import taylor

coef = st.floats(-10, 10, allow_nan=False)


def test_derivative():
    assert taylor.derivative([5.0, 1.0, 2.0, 3.0]) == [1.0, 4.0, 9.0]


def test_to_derivatives():
    assert taylor.to_derivatives([1.0, 2.0, 3.0, 4.0]) == [1.0, 2.0, 6.0, 24.0]


@given(st.lists(coef, min_size=1, max_size=6), st.lists(coef, min_size=1, max_size=6))
def test_mul_matches_polymul(a, b):
    n = min(len(a), len(b))
    expect = np.zeros(2 * n)
    prod = np.polynomial.polynomial.polymul(a[:n], b[:n])
    expect[:prod.size] = prod
    expect = expect[:n]
    np.testing.assert_allclose(taylor.mul(a, b), expect, atol=1e-9)
    assert taylor.add(a, b) == [x + y for x, y in zip(a, b)]


def test_compose_exp_of_sin():
    # exp(sin t) = 1 + t + t^2/2 + 0 t^3 - t^4/8 + ...
    c = [0.0, 1.0, 0.0, -1.0 / 6.0, 0.0]
    out = taylor.compose(c, [1.0] * 5)
    np.testing.assert_allclose(out, [1.0, 1.0, 0.5, 0.0, -0.125], atol=1e-15)


@given(st.lists(coef, min_size=1, max_size=4), st.lists(coef, min_size=4, max_size=4))
@settings(max_examples=200)
def test_low_order_matches_generic(c, d):
    np.testing.assert_allclose(taylor.compose(c, d), taylor.compose_generic(c, d),
                               rtol=1e-12, atol=1e-9)


def test_compose_needs_derivatives():
    with pytest.raises(ValueError, match="need 3"):
        taylor.compose([1.0, 2.0, 3.0], [1.0, 1.0])


@pytest.mark.parametrize("x0", [-0.7, 0.3, 1.9])
def test_compose_against_chain_rule(x0):
    # h = sin, x(t) = x0 + 2t - t^2 + 0.5 t^3 ; compare with direct Taylor of sin(x(t))
    c = [x0, 2.0, -1.0, 0.5, 0.25]
    d = [math.sin(x0), math.cos(x0), -math.sin(x0), -math.cos(x0), math.sin(x0)]
    out = taylor.compose(c, d)
    ts = np.linspace(-1e-2, 1e-2, 9)
    xs = np.polynomial.polynomial.polyval(ts, c)
    fit = np.polynomial.polynomial.polyfit(ts, np.sin(xs), 8)[:5]
    np.testing.assert_allclose(out, fit, rtol=1e-6, atol=1e-7)
