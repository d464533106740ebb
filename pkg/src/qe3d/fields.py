"""Scalar fields on coordinate charts and the 1-d profiles they are built from.

A :class:`Profile` is a function of one real variable that can return its
derivative tower ``[f, f', ..., f^(n)]`` at a batch of points.  A
:class:`ScalarField` lives on a ``dim``-dimensional chart and exposes

* ``eval(points)``: values only, used by the finite-difference oracle;
* ``jet(points, order)``: a batched :class:`~qe3d.jets.Jet`;
* ``partials(point, alpha)``: a single mixed partial at one point.

Fields compose with ``+``, ``*``, ``**`` and scalar arithmetic, so a metric
component such as ``eta**2 * p'**2`` is written exactly like the formula.
Points are arrays of shape ``(dim, *batch)``.
"""

from math import factorial

import numpy as np

from .errors import CapabilityError
from .jets import Jet

CLOSED_FORM = "closed-form"
ODE_BACKED = "ode-backed"
FINITE_DIFFERENCE = "finite-difference"


def _merge_provenance(*fields):
    kinds = {f.provenance for f in fields}
    for kind in (FINITE_DIFFERENCE, ODE_BACKED):
        if kind in kinds:
            return kind
    return CLOSED_FORM


# ---------------------------------------------------------------------------
# one-variable profiles
# ---------------------------------------------------------------------------


class Profile:
    """Function of one variable with an analytic derivative tower."""

    provenance = CLOSED_FORM

    def tower(self, s, order):
        raise NotImplementedError

    def value(self, s):
        return self.tower(s, 0)[0]

    def __call__(self, s):
        return self.tower(s, 0)[0]

    def derivative(self, k=1):
        return DerivativeProfile(self, k)


class OscillatorProfile(Profile):
    """Solution of ``y'' = c y`` with ``y(s0) = y0`` and ``y'(s0) = y1``.

    Covers cosh/sinh/exp (c > 0), sin/cos (c < 0) and linear (c = 0) branches,
    which is every closed form the eta, tau and sn_k profiles need.
    """

    def __init__(self, c, y0, y1, s0=0.0):
        self.c = float(c)
        self.y0 = float(y0)
        self.y1 = float(y1)
        self.s0 = float(s0)

    def _base(self, s):
        t = np.asarray(s, dtype=float) - self.s0
        c = self.c
        if c > 0:
            r = np.sqrt(c)
            ch, sh = np.cosh(r * t), np.sinh(r * t)
            return self.y0 * ch + self.y1 * sh / r, self.y0 * r * sh + self.y1 * ch
        if c < 0:
            r = np.sqrt(-c)
            co, si = np.cos(r * t), np.sin(r * t)
            return self.y0 * co + self.y1 * si / r, -self.y0 * r * si + self.y1 * co
        return self.y0 + self.y1 * t, self.y1 + 0.0 * t

    def tower(self, s, order):
        y, dy = self._base(s)
        out = []
        for k in range(order + 1):
            base = y if k % 2 == 0 else dy
            out.append(self.c ** (k // 2) * base)
        return out

    def __repr__(self):
        return f"OscillatorProfile(c={self.c}, y0={self.y0}, y1={self.y1}, s0={self.s0})"


class PolynomialProfile(Profile):
    """Polynomial with coefficients in increasing degree."""

    def __init__(self, coeffs):
        self.poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))

    def tower(self, s, order):
        s = np.asarray(s, dtype=float)
        out, poly = [], self.poly
        for _ in range(order + 1):
            out.append(poly(s))
            poly = poly.deriv()
        return out


class DerivativeProfile(Profile):
    """The k-th derivative of another profile."""

    def __init__(self, base, k=1):
        self.base = base
        self.k = int(k)
        self.provenance = base.provenance

    def tower(self, s, order):
        return self.base.tower(s, order + self.k)[self.k:]


class ScaledArgProfile(Profile):
    """``f(c * s)`` for a profile ``f``; used for rescaled fiber coordinates."""

    def __init__(self, base, c):
        self.base = base
        self.c = float(c)
        self.provenance = base.provenance

    def tower(self, s, order):
        raw = self.base.tower(self.c * np.asarray(s, dtype=float), order)
        return [self.c**k * d for k, d in enumerate(raw)]


def sn_profile(k):
    """Model warping sn_k with sn_k(0) = 0 and sn_k'(0) = 1."""
    return OscillatorProfile(-float(k), 0.0, 1.0)


# ---------------------------------------------------------------------------
# scalar fields
# ---------------------------------------------------------------------------


class ScalarField:
    """Base class for smooth functions on a chart."""

    dim = None
    provenance = CLOSED_FORM
    max_order = None  # None means arbitrary order

    def _check_order(self, order):
        if self.max_order is not None and order > self.max_order:
            raise CapabilityError(
                f"field provides derivatives up to order {self.max_order}, "
                f"{order} requested"
            )

    def jet(self, points, order):
        self._check_order(order)
        return self._jet(np.asarray(points, dtype=float), order)

    def _jet(self, points, order):
        raise NotImplementedError

    def eval(self, points):
        return self.jet(points, 0).value

    def partials(self, point, alpha):
        alpha = tuple(int(a) for a in alpha)
        jet = self.jet(np.asarray(point, dtype=float), sum(alpha))
        return float(jet.partial(alpha))

    # composition
    def __add__(self, other):
        return SumField(self, _as_field(other, self.dim))

    __radd__ = __add__

    def __sub__(self, other):
        return SumField(self, ScaledField(_as_field(other, self.dim), -1.0))

    def __rsub__(self, other):
        return SumField(_as_field(other, self.dim), ScaledField(self, -1.0))

    def __neg__(self):
        return ScaledField(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return ProductField(self, other)
        return ScaledField(self, float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScalarField):
            return ProductField(self, PowerField(other, -1))
        return ScaledField(self, 1.0 / float(other))

    def __rtruediv__(self, other):
        return ProductField(_as_field(other, self.dim), PowerField(self, -1))

    def __pow__(self, q):
        return PowerField(self, q)


def _as_field(value, dim):
    if isinstance(value, ScalarField):
        return value
    return ConstantField(float(value), dim)


class ConstantField(ScalarField):
    def __init__(self, value, dim):
        self.value = float(value)
        self.dim = dim

    def _jet(self, points, order):
        return Jet.constant(self.value, self.dim, order, points.shape[1:])

    def eval(self, points):
        points = np.asarray(points, dtype=float)
        return np.full(points.shape[1:], self.value)

    def __repr__(self):
        return f"ConstantField({self.value}, dim={self.dim})"


class CoordinateField(ScalarField):
    """The coordinate function x_axis."""

    def __init__(self, axis, dim):
        self.axis = axis
        self.dim = dim

    def _jet(self, points, order):
        return Jet.variable(points[self.axis], self.axis, self.dim, order)

    def eval(self, points):
        return np.asarray(points, dtype=float)[self.axis].copy()


class AxisField(ScalarField):
    """A profile f composed with one coordinate: x -> f(x_axis)."""

    def __init__(self, profile, axis, dim):
        self.profile = profile
        self.axis = axis
        self.dim = dim
        self.provenance = profile.provenance

    def _jet(self, points, order):
        tower = self.profile.tower(points[self.axis], order)
        return Jet.from_derivatives(tower, self.axis, self.dim, order)

    def eval(self, points):
        return np.asarray(self.profile.tower(np.asarray(points, dtype=float)[self.axis], 0)[0])

    def __repr__(self):
        return f"AxisField({self.profile!r}, axis={self.axis})"


class SumField(ScalarField):
    def __init__(self, *terms):
        self.terms = terms
        self.dim = terms[0].dim
        self.provenance = _merge_provenance(*terms)
        orders = [t.max_order for t in terms if t.max_order is not None]
        self.max_order = min(orders) if orders else None

    def _jet(self, points, order):
        out = self.terms[0].jet(points, order)
        for t in self.terms[1:]:
            out = out + t.jet(points, order)
        return out

    def eval(self, points):
        return sum(t.eval(points) for t in self.terms)


class ScaledField(ScalarField):
    def __init__(self, field, factor):
        self.field = field
        self.factor = float(factor)
        self.dim = field.dim
        self.provenance = field.provenance
        self.max_order = field.max_order

    def _jet(self, points, order):
        return self.field.jet(points, order) * self.factor

    def eval(self, points):
        return self.factor * self.field.eval(points)


class ProductField(ScalarField):
    def __init__(self, *factors):
        self.factors = factors
        self.dim = factors[0].dim
        self.provenance = _merge_provenance(*factors)
        orders = [f.max_order for f in factors if f.max_order is not None]
        self.max_order = min(orders) if orders else None

    def _jet(self, points, order):
        out = self.factors[0].jet(points, order)
        for f in self.factors[1:]:
            out = out * f.jet(points, order)
        return out

    def eval(self, points):
        out = self.factors[0].eval(points)
        for f in self.factors[1:]:
            out = out * f.eval(points)
        return out


class PowerField(ScalarField):
    """field ** q; non-negative integer powers avoid the power series."""

    def __init__(self, field, q):
        self.field = field
        self.q = q
        self.dim = field.dim
        self.provenance = field.provenance
        self.max_order = field.max_order

    def _jet(self, points, order):
        return self.field.jet(points, order) ** self.q

    def eval(self, points):
        return np.asarray(self.field.eval(points), dtype=float) ** self.q


class LogField(ScalarField):
    def __init__(self, field):
        self.field = field
        self.dim = field.dim
        self.provenance = field.provenance
        self.max_order = field.max_order

    def _jet(self, points, order):
        return self.field.jet(points, order).log()

    def eval(self, points):
        return np.log(self.field.eval(points))


class DerivativeField(ScalarField):
    """Partial derivative of a field along one coordinate."""

    def __init__(self, field, axis):
        self.field = field
        self.axis = axis
        self.dim = field.dim
        self.provenance = field.provenance
        self.max_order = None if field.max_order is None else field.max_order - 1

    def _jet(self, points, order):
        return self.field.jet(points, order + 1).diff(self.axis)


class FiniteDifferenceField(ScalarField):
    """Wraps a plain callable; derivatives come from central differences.

    Only orders up to two are offered, which is enough for curvature but not
    for anything that differentiates curvature.
    """

    provenance = FINITE_DIFFERENCE
    max_order = 2

    def __init__(self, func, dim, h=1e-3):
        self.func = func
        self.dim = dim
        self.h = float(h)

    def eval(self, points):
        return np.asarray(self.func(np.asarray(points, dtype=float)), dtype=float)

    def _shift(self, points, steps):
        out = np.array(points, dtype=float, copy=True)
        for axis, k in steps:
            out[axis] = out[axis] + k * self.h
        return self.eval(out)

    def _jet(self, points, order):
        from .jets import basis, size

        batch = points.shape[1:]
        c = np.zeros((size(self.dim, order),) + batch)
        idx, _ = basis(self.dim, order)
        w1 = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}
        w2 = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
        h = self.h
        for n, alpha in enumerate(idx):
            nz = [(ax, a) for ax, a in enumerate(alpha) if a]
            if not nz:
                c[n] = self.eval(points)
            elif len(nz) == 1 and nz[0][1] == 1:
                ax = nz[0][0]
                c[n] = sum(w * self._shift(points, [(ax, k)]) for k, w in w1.items()) / (12 * h)
            elif len(nz) == 1:
                ax = nz[0][0]
                d2 = sum(w * self._shift(points, [(ax, k)]) for k, w in w2.items()) / (12 * h * h)
                c[n] = d2 / 2.0
            else:
                (a1, _), (a2, _) = nz
                acc = 0.0
                for k1, v1 in w1.items():
                    for k2, v2 in w1.items():
                        acc = acc + v1 * v2 * self._shift(points, [(a1, k1), (a2, k2)])
                c[n] = acc / (144 * h * h)
        return Jet(c, self.dim, order)


def taylor_tower(coeffs):
    """Convert Taylor coefficients c_k into derivatives k! c_k."""
    return [factorial(k) * c for k, c in enumerate(coeffs)]
