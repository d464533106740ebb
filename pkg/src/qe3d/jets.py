"""Truncated multivariate Taylor polynomials ("jets") batched over points.

A jet of order ``n`` in ``d`` variables stores the Taylor coefficients
``c_alpha = D^alpha f / alpha!`` for every multi-index with ``|alpha| <= n``.
The leading axis of :attr:`Jet.c` runs over multi-indices (sorted by total
degree, so lower-order jets are prefixes of higher-order ones); the trailing
axes are a batch of evaluation points.

Arithmetic truncates to the smaller order of the operands and
differentiation lowers the order by one, so a metric given to order 3 yields
Christoffel symbols to order 2 and Ricci curvature to order 1.
"""

from functools import lru_cache
from math import comb, factorial

import numpy as np


def _compositions(total, dim):
    if dim == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, dim - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def basis(dim, order):
    """Multi-indices of total degree <= order, and their positions."""
    idx = tuple(a for n in range(order + 1) for a in _compositions(n, dim))
    return idx, {a: i for i, a in enumerate(idx)}


def size(dim, order):
    return comb(dim + order, order)


@lru_cache(maxsize=None)
def _mul_table(dim, order):
    idx, pos = basis(dim, order)
    triples = []
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            if sum(a) + sum(b) <= order:
                k = pos[tuple(x + y for x, y in zip(a, b))]
                triples.append((k, i, j))
    triples.sort()
    k, i, j = (np.array(t) for t in zip(*triples))
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    return i, j, starts


@lru_cache(maxsize=None)
def _diff_table(dim, order, axis):
    idx, pos = basis(dim, order)
    low, _ = basis(dim, order - 1)
    src, fac = [], []
    for a in low:
        up = list(a)
        up[axis] += 1
        src.append(pos[tuple(up)])
        fac.append(a[axis] + 1)
    return np.array(src), np.array(fac, dtype=float)


def _bcast(fac, ndim):
    return fac.reshape(fac.shape + (1,) * (ndim - 1))


class Jet:
    """Truncated Taylor expansion of a scalar function at a batch of points."""

    __slots__ = ("c", "dim", "order")
    __array_priority__ = 100.0

    def __init__(self, c, dim, order):
        c = np.asarray(c, dtype=float)
        if c.shape[0] != size(dim, order):
            raise ValueError("coefficient array does not match (dim, order)")
        self.c = c
        self.dim = dim
        self.order = order

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value, dim, order, batch=()):
        value = np.broadcast_to(np.asarray(value, dtype=float), batch)
        c = np.zeros((size(dim, order),) + value.shape)
        c[0] = value
        return cls(c, dim, order)

    @classmethod
    def variable(cls, value, axis, dim, order):
        value = np.asarray(value, dtype=float)
        c = np.zeros((size(dim, order),) + value.shape)
        c[0] = value
        if order >= 1:
            e = [0] * dim
            e[axis] = 1
            c[basis(dim, order)[1][tuple(e)]] = 1.0
        return cls(c, dim, order)

    @classmethod
    def from_derivatives(cls, derivs, axis, dim, order):
        """Embed the derivative tower f, f', ... of a function of one coordinate."""
        if len(derivs) < order + 1:
            raise ValueError("derivative tower too short for requested order")
        d0 = np.asarray(derivs[0], dtype=float)
        c = np.zeros((size(dim, order),) + d0.shape)
        pos = basis(dim, order)[1]
        for k in range(order + 1):
            e = [0] * dim
            e[axis] = k
            c[pos[tuple(e)]] = np.asarray(derivs[k], dtype=float) / factorial(k)
        return cls(c, dim, order)

    # -- access -----------------------------------------------------------
    @property
    def value(self):
        return self.c[0]

    @property
    def batch_shape(self):
        return self.c.shape[1:]

    def partial(self, alpha):
        """Partial derivative D^alpha evaluated at the batch points."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise ValueError("derivative order exceeds jet order")
        scale = 1.0
        for a in alpha:
            scale *= factorial(a)
        return self.c[basis(self.dim, self.order)[1][alpha]] * scale

    def gradient(self):
        out = []
        for axis in range(self.dim):
            e = [0] * self.dim
            e[axis] = 1
            out.append(self.partial(e))
        return np.stack(out)

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return Jet(self.c[: size(self.dim, order)], self.dim, order)

    def diff(self, axis):
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.dim, self.order, axis)
        return Jet(self.c[src] * _bcast(fac, self.c.ndim), self.dim, self.order - 1)

    # -- arithmetic -------------------------------------------------------
    def _pair(self, other):
        order = min(self.order, other.order)
        n = size(self.dim, order)
        return self.c[:n], other.c[:n], order

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._pair(other)
            return Jet(a + b, self.dim, order)
        c = self.c.copy() if np.ndim(other) <= len(self.batch_shape) else None
        if c is None:
            raise ValueError("scalar operand has more axes than the jet batch")
        c = c + 0.0 * np.asarray(other)  # broadcast batch if needed
        c[0] = c[0] + other
        return Jet(c, self.dim, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.dim, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._pair(other)
            i, j, starts = _mul_table(self.dim, order)
            return Jet(np.add.reduceat(a[i] * b[j], starts, axis=0), self.dim, order)
        return Jet(self.c * np.asarray(other, dtype=float), self.dim, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.c / np.asarray(other, dtype=float), self.dim, self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, q):
        if isinstance(q, (int, np.integer)) and q >= 0:
            out = Jet.constant(1.0, self.dim, self.order, self.batch_shape)
            base = self
            n = int(q)
            while n:
                if n & 1:
                    out = out * base
                n >>= 1
                if n:
                    base = base * base
            return out
        return self.power(float(q))

    # -- composition with univariate functions ------------------------------
    def compose(self, derivs):
        """f(self) given [f(x0), f'(x0), ..., f^(n)(x0)] at x0 = self.value."""
        u = Jet(self.c.copy(), self.dim, self.order)
        u.c[0] = 0.0
        out = Jet.constant(derivs[0], self.dim, self.order, self.batch_shape)
        term = None
        for k in range(1, self.order + 1):
            term = u if term is None else term * u
            out = out + term * (np.asarray(derivs[k]) / factorial(k))
        return out

    def power(self, q):
        x0 = self.value
        derivs, coef = [], 1.0
        for k in range(self.order + 1):
            derivs.append(coef * x0 ** (q - k))
            coef *= q - k
        return self.compose(derivs)

    def reciprocal(self):
        return self.power(-1.0)

    def sqrt(self):
        return self.power(0.5)

    def log(self):
        x0 = self.value
        derivs = [np.log(x0)]
        for k in range(1, self.order + 1):
            derivs.append((-1.0) ** (k - 1) * factorial(k - 1) * x0 ** (-float(k)))
        return self.compose(derivs)

    def exp(self):
        e = np.exp(self.value)
        return self.compose([e] * (self.order + 1))

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, batch={self.batch_shape})"
