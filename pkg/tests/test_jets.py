import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qe3d.jets import Jet, basis, size


def _poly_jet(x, y, order):
    X = Jet.variable(x, 0, 2, order)
    Y = Jet.variable(y, 1, 2, order)
    return X, Y


def test_basis_sorted_by_degree():
    idx, pos = basis(3, 3)
    degrees = [sum(a) for a in idx]
    assert degrees == sorted(degrees)
    assert len(idx) == size(3, 3) == 20
    assert all(pos[a] == n for n, a in enumerate(idx))


def test_product_rule_mixed_partials():
    X, Y = _poly_jet(0.7, -0.3, 4)
    f = X * X * Y + Y * Y * Y
    # f = x²y + y³
    assert f.partial((0, 0)) == pytest.approx(0.7**2 * -0.3 + (-0.3) ** 3)
    assert f.partial((1, 1)) == pytest.approx(2 * 0.7)
    assert f.partial((2, 1)) == pytest.approx(2.0)
    assert f.partial((0, 3)) == pytest.approx(6.0)
    assert f.partial((1, 0)) == pytest.approx(2 * 0.7 * -0.3)


def test_elementary_functions_match_closed_forms():
    x = np.linspace(0.2, 2.0, 7)
    X = Jet.variable(x, 0, 1, 4)
    for jet, derivs in [
        (X.exp(), [np.exp(x)] * 5),
        (X.log(), [np.log(x), 1 / x, -1 / x**2, 2 / x**3, -6 / x**4]),
        (X.sqrt(), [np.sqrt(x), 0.5 * x**-0.5, -0.25 * x**-1.5, 0.375 * x**-2.5, -0.9375 * x**-3.5]),
        (X.reciprocal(), [1 / x, -1 / x**2, 2 / x**3, -6 / x**4, 24 / x**5]),
    ]:
        for k, d in enumerate(derivs):
            np.testing.assert_allclose(jet.partial((k,)), d, rtol=1e-12)


def test_power_integer_and_fractional_agree():
    X = Jet.variable(np.array([0.5, 1.5]), 0, 1, 5)
    np.testing.assert_allclose((X**3).c, X.power(3.0).c, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose((X**-2).partial((1,)), -2 * np.array([0.5, 1.5]) ** -3)


def test_diff_lowers_order():
    X, Y = _poly_jet(1.0, 2.0, 3)
    f = X * Y * Y
    g = f.diff(1)
    assert g.order == 2
    assert g.partial((0, 0)) == pytest.approx(2 * 1.0 * 2.0)
    assert g.partial((1, 1)) == pytest.approx(2.0)


def test_mixed_order_truncates_to_minimum():
    a = Jet.variable(1.0, 0, 2, 4)
    b = Jet.variable(1.0, 1, 2, 2)
    assert (a * b).order == 2
    with pytest.raises(ValueError):
        b.truncate(3)
    with pytest.raises(ValueError):
        b.partial((3, 0))


def test_division_matches_finite_differences():
    h = 1e-4
    f = lambda x, y: np.sin(x) / (1 + x * x * y)  # noqa: E731
    X, Y = _poly_jet(0.4, 0.9, 2)
    sx = X.compose([np.sin(0.4), np.cos(0.4), -np.sin(0.4)])
    jet = sx / (X * X * Y + 1.0)
    fd_xy = (f(0.4 + h, 0.9 + h) - f(0.4 + h, 0.9 - h) - f(0.4 - h, 0.9 + h) + f(0.4 - h, 0.9 - h)) / (4 * h * h)
    assert jet.partial((1, 1)) == pytest.approx(fd_xy, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.2, 3.0),
    st.floats(0.2, 3.0),
    st.floats(-2.0, 2.0),
)
def test_field_axioms(x, y, q):
    X, Y = _poly_jet(x, y, 3)
    lhs = (X + Y) * (X + Y)
    rhs = X * X + 2.0 * X * Y + Y * Y
    np.testing.assert_allclose(lhs.c, rhs.c, rtol=1e-12, atol=1e-12)
    ratio = (X * Y) / Y
    np.testing.assert_allclose(ratio.c, X.c, rtol=1e-10, atol=1e-10)
    back = (X.power(q)).power(1.0 / q) if abs(q) > 0.1 else X
    np.testing.assert_allclose(back.c, X.c, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(X.log().exp().c, X.c, rtol=1e-10, atol=1e-10)
