"""Curvature of diagonal metrics from analytic derivative towers.

Index conventions
-----------------
``christoffel[k, i, j]`` is Gamma^k_ij.  ``riemann[i, j, k, l]`` is
g(R(d_i, d_j) d_k, d_l) with R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y], so
that R[i, j, j, i] / (g_ii g_jj) is the sectional curvature of the (i, j)
plane.  ``ricci[j, k] = sum_i R^i_ijk`` and ``scalar = sum_j ricci[j, j] / g_jj``.

All arrays carry the point batch on their trailing axes.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import CapabilityError, DegenerateMetricError, DomainError
from .jets import Jet


@dataclass(frozen=True)
class CoordChart:
    """Box of coordinate ranges with default sample counts."""

    ranges: tuple
    grid: tuple = None
    names: tuple = None

    def __post_init__(self):
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
        if len(ranges) < 2:
            raise ValueError("a chart needs dim >= 2")
        for lo, hi in ranges:
            if not hi > lo:
                raise ValueError(f"range ({lo}, {hi}) has non-positive length")
        grid = self.grid if self.grid is not None else (21,) * len(ranges)
        grid = tuple(int(n) for n in grid)
        if len(grid) != len(ranges) or min(grid) < 3:
            raise ValueError("grid needs one count >= 3 per coordinate")
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "grid", grid)
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(len(ranges))))

    @property
    def dim(self):
        return len(self.ranges)

    def contains(self, points, margin=0.0):
        pts = np.asarray(points, dtype=float)
        ok = np.ones(pts.shape[1:], dtype=bool)
        for axis, (lo, hi) in enumerate(self.ranges):
            ok &= (pts[axis] >= lo + margin) & (pts[axis] <= hi - margin)
        return ok

    def require(self, points, margin=0.0):
        pts = np.asarray(points, dtype=float)
        if pts.shape[0] != self.dim:
            raise DomainError(f"points must have leading axis of length {self.dim}")
        if not np.all(self.contains(pts, margin)):
            raise DomainError("point lies outside the chart" + (" stencil" if margin else ""))
        return pts

    def grid_points(self, counts=None, inset=0.0):
        """Tensor grid flattened to shape (dim, N).

        ``inset`` shrinks each range by that fraction of its length at both
        ends so that grids can stay away from chart boundaries.
        """
        counts = self.grid if counts is None else counts
        if np.isscalar(counts):
            counts = (int(counts),) * self.dim
        axes = []
        for (lo, hi), n in zip(self.ranges, counts):
            pad = inset * (hi - lo)
            axes.append(np.linspace(lo + pad, hi - pad, int(n)))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])


class DiagonalMetric:
    """g = sum_i g_ii dx_i^2 with components given as scalar fields."""

    def __init__(self, chart, components):
        if len(components) != chart.dim:
            raise ValueError("need one component per coordinate")
        for c in components:
            if c.dim != chart.dim:
                raise ValueError("component dimension does not match chart")
        self.chart = chart
        self.components = tuple(components)

    @property
    def dim(self):
        return self.chart.dim

    def jets(self, points, order):
        pts = self.chart.require(points)
        jets = [c.jet(pts, order) for c in self.components]
        for j in jets:
            if np.any(~(j.value > 0)):
                raise DegenerateMetricError("metric component is not positive at a requested point")
        return jets

    def values(self, points):
        return np.stack([np.asarray(c.eval(points), dtype=float) for c in self.components])


# ---------------------------------------------------------------------------
# jet-level tensor calculus, shared with the verifier
# ---------------------------------------------------------------------------


def christoffel_jets(g):
    """Nonzero Gamma^k_ij of a diagonal metric as a dict (k, i, j) -> Jet."""
    d = len(g)
    dg = [[gi.diff(a) for a in range(d)] for gi in g]
    inv_half = [gi.truncate(gi.order - 1).reciprocal() * 0.5 for gi in g]
    gam = {}
    for k in range(d):
        for i in range(d):
            for j in range(i, d):
                if i == j == k:
                    val = inv_half[k] * dg[k][k]
                elif i == k:
                    val = inv_half[k] * dg[k][j]
                elif j == k:
                    val = inv_half[k] * dg[k][i]
                elif i == j:
                    val = -(inv_half[k] * dg[i][k])
                else:
                    continue
                gam[(k, i, j)] = val
                gam[(k, j, i)] = val
    return gam


class CurvatureJets:
    """Christoffel symbols, Riemann and Ricci tensors as jets.

    If the metric jets have order n, Gamma has order n - 1 and curvature
    order n - 2.  Missing keys in the dictionaries are identically zero.
    """

    def __init__(self, g):
        order = min(gi.order for gi in g)
        if order < 2:
            raise CapabilityError("curvature needs metric derivatives to order 2")
        self.g = [gi.truncate(order) for gi in g]
        self.dim = len(g)
        self.order = order
        self.gamma = christoffel_jets(self.g)
        self.riemann_up = self._riemann_up()
        self.riemann = {
            (i, j, k, l): v * self.g[l] for (l, i, j, k), v in self.riemann_up.items()
        }
        self.ricci = self._ricci()
        ginv = [gi.truncate(order - 2).reciprocal() for gi in self.g]
        self.scalar = None
        for j in range(self.dim):
            term = self.ricci[(j, j)] * ginv[j]
            self.scalar = term if self.scalar is None else self.scalar + term

    def _riemann_up(self):
        d, gam = self.dim, self.gamma
        zero = Jet.constant(0.0, d, self.order - 2, self.g[0].batch_shape)
        out = {}
        for l in range(d):
            for k in range(d):
                for i, j in combinations(range(d), 2):
                    acc = None
                    for sign, a, b in ((1.0, i, j), (-1.0, j, i)):
                        t = gam.get((l, b, k))
                        if t is not None:
                            t = t.diff(a) * sign
                            acc = t if acc is None else acc + t
                        for m in range(d):
                            g1, g2 = gam.get((l, a, m)), gam.get((m, b, k))
                            if g1 is not None and g2 is not None:
                                t = g1 * g2 * sign
                                acc = t if acc is None else acc + t
                    if acc is None:
                        continue
                    acc = acc.truncate(self.order - 2)
                    out[(l, i, j, k)] = acc
                    out[(l, j, i, k)] = -acc
        self._zero = zero
        return out

    def _ricci(self):
        d = self.dim
        ric = {}
        for j in range(d):
            for k in range(d):
                acc = self._zero
                for i in range(d):
                    v = self.riemann_up.get((i, i, j, k))
                    if v is not None:
                        acc = acc + v
                ric[(j, k)] = acc
        return ric

    # dense arrays of values ---------------------------------------------
    def christoffel_array(self):
        d = self.dim
        out = np.zeros((d, d, d) + self.g[0].batch_shape)
        for (k, i, j), v in self.gamma.items():
            out[k, i, j] = v.value
        return out

    def riemann_array(self):
        d = self.dim
        out = np.zeros((d,) * 4 + self.g[0].batch_shape)
        for key, v in self.riemann.items():
            out[key] = v.value
        return out

    def ricci_array(self):
        d = self.dim
        out = np.zeros((d, d) + self.g[0].batch_shape)
        for key, v in self.ricci.items():
            out[key] = v.value
        return out


@dataclass(frozen=True)
class CurvatureData:
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray


def christoffel_symbols(metric, point):
    """Gamma^k_ij at a point (or batch), indexed ``[k, i, j]``."""
    g = metric.jets(point, 1)
    d = metric.dim
    out = np.zeros((d, d, d) + g[0].batch_shape)
    for (k, i, j), v in christoffel_jets(g).items():
        out[k, i, j] = v.value
    return out


def curvature_jets(metric, points, order=2):
    return CurvatureJets(metric.jets(points, order))


def curvature(metric, point):
    cj = curvature_jets(metric, point, 2)
    return CurvatureData(
        christoffel=cj.christoffel_array(),
        riemann=cj.riemann_array(),
        ricci=cj.ricci_array(),
        scalar=np.asarray(cj.scalar.value),
    )


def hessian_from_jets(wj, gamma, dim):
    """Covariant Hessian d_i d_j w - Gamma^k_ij d_k w as a dict of jets."""
    dw = [wj.diff(a) for a in range(dim)]
    out = {}
    for i in range(dim):
        for j in range(i, dim):
            val = dw[i].diff(j)
            for k in range(dim):
                gk = gamma.get((k, i, j))
                if gk is not None:
                    val = val - gk * dw[k]
            out[(i, j)] = val
            out[(j, i)] = val
    return out


def hessian(field, metric, point):
    """∇dw at a point (or batch) as an array ``[i, j, *batch]``."""
    pts = metric.chart.require(point)
    g = metric.jets(pts, 1)
    wj = field.jet(pts, 2)
    d = metric.dim
    hess = hessian_from_jets(wj, christoffel_jets(g), d)
    out = np.zeros((d, d) + g[0].batch_shape)
    for key, v in hess.items():
        out[key] = v.value
    return out


# ---------------------------------------------------------------------------
# eigenstructure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenReport:
    eigenvalues: tuple
    clusters: tuple  # distinct values, ascending
    multiplicities: tuple
    distinct: tuple  # ((i, j, bool), ...) over sorted eigenvalue pairs
    eigenspaces: tuple  # coordinate directions spanning each cluster

    @property
    def n_distinct(self):
        return len(self.clusters)


def cluster_eigenvalues(values, tol):
    order = np.argsort(values)
    vals = np.asarray(values, dtype=float)[order]
    groups = [[0]]
    for n in range(1, len(vals)):
        if abs(vals[n] - vals[groups[-1][-1]]) <= tol:
            groups[-1].append(n)
        else:
            groups.append([n])
    return vals, order, groups


def ricci_eigenstructure(metric, point, tol=1e-7):
    """Eigenvalues of the Ricci operator g^{ik} R_kj at a single point."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pt = np.asarray(point, dtype=float).reshape(metric.dim)
    data = curvature(metric, pt)
    gdiag = metric.values(pt)
    scale = 1.0 / np.sqrt(gdiag)
    op = data.ricci * scale[:, None] * scale[None, :]  # orthonormal components
    op = 0.5 * (op + op.T)
    vals, vecs = np.linalg.eigh(op)
    svals, order, groups = cluster_eigenvalues(vals, tol)
    vecs = vecs[:, order]
    clusters, mults, spaces = [], [], []
    for grp in groups:
        clusters.append(float(np.mean(svals[grp])))
        mults.append(len(grp))
        proj = np.sum(vecs[:, grp] ** 2, axis=1)
        spaces.append(tuple(int(i) for i in np.flatnonzero(proj > 0.5)))
    distinct = tuple(
        (i, j, bool(abs(svals[i] - svals[j]) > tol))
        for i, j in combinations(range(len(svals)), 2)
    )
    return EigenReport(
        eigenvalues=tuple(float(v) for v in svals),
        clusters=tuple(clusters),
        multiplicities=tuple(mults),
        distinct=distinct,
        eigenspaces=tuple(spaces),
    )


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------

_W1 = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
_W2 = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))


def _shifted(metric, pts, shifts, h):
    q = pts.copy()
    for axis, k in shifts:
        q[axis] = q[axis] + k * h
    return metric.values(q)


def fd_metric_derivatives(metric, points, h):
    """g, dg[c, a], ddg[c, a, b] from 4th-order stencils on component values."""
    pts = metric.chart.require(points, margin=0.0)
    if not np.all(metric.chart.contains(pts, margin=2 * h)):
        raise DomainError("finite-difference stencil leaves the chart")
    d = metric.dim
    g = metric.values(pts)
    dg = np.stack(
        [sum(w * _shifted(metric, pts, [(a, k)], h) for k, w in _W1) / (12 * h) for a in range(d)],
        axis=1,
    )
    ddg = np.empty((d, d, d) + pts.shape[1:])
    for a in range(d):
        ddg[:, a, a] = sum(w * _shifted(metric, pts, [(a, k)], h) for k, w in _W2) / (12 * h * h)
    for a, b in combinations(range(d), 2):
        acc = 0.0
        for ka, wa in _W1:
            for kb, wb in _W1:
                acc = acc + wa * wb * _shifted(metric, pts, [(a, ka), (b, kb)], h)
        ddg[:, a, b] = ddg[:, b, a] = acc / (144 * h * h)
    return g, dg, ddg


def fd_riemann(metric, points, h=1e-3):
    """Lowered Riemann tensor [i, j, k, l] built only from component values."""
    g, dg, ddg = fd_metric_derivatives(metric, points, h)
    d = metric.dim
    delta = np.eye(d)
    # full metric derivative arrays G[a, b], dG[a, b, c] = d_c g_ab, ddG[a, b, c, e]
    dG = np.einsum("ab,acx->abcx", delta, dg)
    ddG = np.einsum("ab,acex->abcex", delta, ddg)
    # Gamma^z_ij = (d_i g_zj + d_j g_zi - d_z g_ij) / (2 g_z)
    gam = (
        np.einsum("zjix->zijx", dG) + np.einsum("zijx->zijx", dG) - np.einsum("ijzx->zijx", dG)
    ) / (2.0 * g[:, None, None])
    # R_{ijkl} = <R(d_i, d_j) d_k, d_l>
    R = 0.5 * (
        np.einsum("ljikx->ijklx", ddG)
        + np.einsum("kijlx->ijklx", ddG)
        - np.einsum("kjilx->ijklx", ddG)
        - np.einsum("lijkx->ijklx", ddG)
    )
    R = R + np.einsum("zx,zikx,zjlx->ijklx", g, gam, gam) - np.einsum("zx,zjkx,zilx->ijklx", g, gam, gam)
    return R


def fd_cross_check(metric, point, h=1e-3):
    """Max |analytic Riemann - finite-difference Riemann| over all components."""
    pts = np.asarray(point, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    fd = fd_riemann(metric, pts, h)
    exact = curvature(metric, pts).riemann
    return float(np.max(np.abs(fd - exact)))
