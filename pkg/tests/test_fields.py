import numpy as np
import pytest

from qe3d.errors import CapabilityError
from qe3d.fields import (
    CLOSED_FORM,
    FINITE_DIFFERENCE,
    ODE_BACKED,
    AxisField,
    ConstantField,
    CoordinateField,
    DerivativeField,
    FiniteDifferenceField,
    LogField,
    OscillatorProfile,
    PolynomialProfile,
    ScaledArgProfile,
    sn_profile,
    taylor_tower,
)
from qe3d.ode import KobayashiP, integrate


@pytest.mark.parametrize(
    "c, y0, y1, expected",
    [
        (1.0, 1.0, 1.0, np.exp),
        (1.0, 1.0, 0.0, np.cosh),
        (-1.0, 0.0, 1.0, np.sin),
        (-4.0, 1.0, 0.0, lambda s: np.cos(2 * s)),
        (0.0, 2.0, 3.0, lambda s: 2 + 3 * s),
    ],
)
def test_oscillator_branches(c, y0, y1, expected):
    s = np.linspace(-1.3, 1.7, 11)
    prof = OscillatorProfile(c, y0, y1)
    np.testing.assert_allclose(prof(s), expected(s), rtol=1e-13, atol=1e-13)
    tower = prof.tower(s, 4)
    np.testing.assert_allclose(tower[2], c * tower[0], atol=1e-12)
    np.testing.assert_allclose(tower[3], c * tower[1], atol=1e-12)


@pytest.mark.parametrize("k", [1.0, 0.0, -1.0, 4.0])
def test_sn_profile_initial_data(k):
    y, dy, d2y = sn_profile(k).tower(np.array([0.0]), 2)
    assert (y[0], dy[0], d2y[0]) == (0.0, 1.0, 0.0)


def test_polynomial_and_scaled_profiles():
    poly = PolynomialProfile([1.0, 0.0, 3.0])  # 1 + 3s²
    s = np.array([0.5, 2.0])
    y, dy, d2y, d3y = poly.tower(s, 3)
    np.testing.assert_allclose(dy, 6 * s)
    np.testing.assert_allclose(d2y, 6.0)
    np.testing.assert_allclose(d3y, 0.0)
    scaled = ScaledArgProfile(OscillatorProfile(-1.0, 0.0, 1.0), 2.0)
    np.testing.assert_allclose(scaled.tower(s, 1)[1], 2 * np.cos(2 * s))
    np.testing.assert_allclose(poly.derivative().tower(s, 0)[0], 6 * s)


def test_field_algebra_jets():
    x = CoordinateField(0, 2)
    y = CoordinateField(1, 2)
    f = (x**2 + 1.0) * y - 2.0 / (y + 3.0) + LogField(x)
    pt = np.array([1.5, 0.5])
    assert f.eval(pt) == pytest.approx((1.5**2 + 1) * 0.5 - 2 / 3.5 + np.log(1.5))
    assert f.partials(pt, (1, 0)) == pytest.approx(2 * 1.5 * 0.5 + 1 / 1.5)
    assert f.partials(pt, (0, 2)) == pytest.approx(-4 / 3.5**3)
    assert f.partials(pt, (1, 1)) == pytest.approx(3.0)
    assert (-f).eval(pt) == pytest.approx(-f.eval(pt))
    assert (3.0 - f).eval(pt) == pytest.approx(3.0 - f.eval(pt))


def test_derivative_field():
    g = AxisField(OscillatorProfile(-1.0, 0.0, 1.0), 1, 2)
    dg = DerivativeField(g, 1)
    pt = np.array([0.0, 0.3])
    assert dg.eval(pt) == pytest.approx(np.cos(0.3))
    assert dg.partials(pt, (0, 2)) == pytest.approx(-np.cos(0.3))


def test_finite_difference_field_capability():
    fd = FiniteDifferenceField(lambda p: np.sin(p[0]) * p[1] ** 2, 2)
    pt = np.array([0.4, 1.2])
    assert fd.partials(pt, (1, 1)) == pytest.approx(2 * 1.2 * np.cos(0.4), rel=1e-8)
    assert fd.partials(pt, (2, 0)) == pytest.approx(-np.sin(0.4) * 1.44, rel=1e-7)
    with pytest.raises(CapabilityError):
        fd.jet(pt, 3)
    with pytest.raises(CapabilityError):
        (fd * ConstantField(2.0, 2)).jet(pt, 3)


def test_provenance_propagates():
    closed = AxisField(OscillatorProfile(1.0, 1.0, 0.0), 0, 2)
    sol = integrate(KobayashiP(0.0, 1.0, 2), (1.0, 0.0), span=(-1, 1))
    ode = AxisField(sol, 1, 2)
    fd = FiniteDifferenceField(lambda p: p[0], 2)
    assert closed.provenance == CLOSED_FORM
    assert (closed * ode).provenance == ODE_BACKED
    assert (closed + ode + fd).provenance == FINITE_DIFFERENCE


def test_taylor_tower():
    assert taylor_tower([1.0, 2.0, 3.0, 4.0]) == [1.0, 2.0, 6.0, 24.0]
