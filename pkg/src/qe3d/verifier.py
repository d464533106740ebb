"""Residual checks for (lambda, 3+m)-Einstein spaces (M, g, w).

Every check evaluates analytic jets of the metric and the potential on a
batch of points and reports the worst orthonormal-frame component.  The
quantities checked are

* the defining equation  ∇dw = (w/m)(Rc - λ g), and the equivalent m-QE form
  Rc + ∇df - df⊗df/m = λ g with f = -m log w;
* constancy of μ = ((R + (m - 3)λ)/m) w² + (m - 1)|∇w|²;
* the Codazzi property of C = w^{m+1} Rc + w^{m+1}(2λ - mR)/(2(m-1)) g;
* the scalar-curvature gradient identity
  (w/(2(m-1))) ∇R = -Rc(∇w, ·) + ((n-1)λ - R)/(m-1) g(∇w, ·) with n = 3;
* connection coefficients of the coordinate frame E_i = ∂_i/√g_ii.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CapabilityError, FrameUndefinedError, InvalidSpaceError
from .geometry import CurvatureJets, cluster_eigenvalues, hessian_from_jets

N_BASE = 3
REGIMES = ("not-eigen", "grad-e1", "grad-e3", "generic")


@dataclass(frozen=True)
class QESpace:
    """A chart-level (λ, 3+m)-Einstein candidate."""

    metric: object
    w: object
    lam: float
    m: int
    mu_expected: float = None
    regime: str = "generic"
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise InvalidSpaceError("m must be an integer >= 2")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.w.dim != self.metric.dim:
            raise InvalidSpaceError("potential and metric live on different charts")

    @property
    def dim(self):
        return self.metric.dim

    @property
    def chart(self):
        return self.metric.chart

    def default_grid(self, counts=None):
        return self.metric.chart.grid_points(counts)


@dataclass(frozen=True)
class ResidualReport:
    identity: str
    components: dict
    max_residual: float
    mean_residual: float
    grid_size: int
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_components(cls, identity, comps, tol, grid_size, extra=None):
        maxes = {k: float(np.max(np.abs(v))) if np.size(v) else 0.0 for k, v in comps.items()}
        allv = np.concatenate([np.abs(np.ravel(v)) for v in comps.values()]) if comps else np.zeros(1)
        worst = float(np.max(allv)) if allv.size else 0.0
        return cls(
            identity=identity,
            components=maxes,
            max_residual=worst,
            mean_residual=float(np.mean(allv)) if allv.size else 0.0,
            grid_size=int(grid_size),
            tolerance=float(tol),
            passed=bool(worst < tol),
            extra=extra or {},
        )

    def to_dict(self):
        out = {
            "identity": self.identity,
            "components": dict(sorted(self.components.items())),
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "grid_size": self.grid_size,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        extra = {}
        for k, v in sorted(self.extra.items()):
            if isinstance(v, ResidualReport):
                extra[k] = v.to_dict()
            elif isinstance(v, np.ndarray):
                continue
            else:
                extra[k] = v
        if extra:
            out["extra"] = extra
        return out


class _Evaluation:
    """Jets of g, w and curvature on one batch of points."""

    def __init__(self, space, points, order=3):
        self.space = space
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.points = pts
        self.g = space.metric.jets(pts, order)
        self.w = space.w.jet(pts, order)
        if np.any(~(self.w.value > 0)):
            raise InvalidSpaceError("potential w is not positive on the grid")
        self.cj = CurvatureJets(self.g)
        self.dim = space.dim
        self.sqrt_g = [np.sqrt(gi.value) for gi in self.g]

    @property
    def npts(self):
        return self.points.shape[1]

    def ortho(self, value, idx):
        scale = 1.0
        for i in idx:
            scale = scale * self.sqrt_g[i]
        return value / scale

    def hessian(self, wj=None):
        return hessian_from_jets(self.w if wj is None else wj, self.cj.gamma, self.dim)

    def grad_sq(self):
        return sum(self.w.diff(i).value ** 2 / self.g[i].value for i in range(self.dim))

    def ricci_ortho(self):
        d = self.dim
        out = np.empty((self.npts, d, d))
        for i in range(d):
            for j in range(d):
                out[:, i, j] = self.ortho(self.cj.ricci[(i, j)].value, (i, j))
        return out


def _pairs(dim):
    return [(i, j) for i in range(dim) for j in range(i, dim)]


def _key(idx):
    return "".join(str(i + 1) for i in idx)


# ---------------------------------------------------------------------------
# defining equation
# ---------------------------------------------------------------------------


def qe_residual(space, grid=None, tol=1e-6, tol_qe=1e-5):
    """Residual of ∇dw - (w/m)(Rc - λg) plus the m-QE form with f = -m log w."""
    pts = space.default_grid() if grid is None else grid
    ev = _Evaluation(space, pts, order=2)
    m, lam = space.m, space.lam
    hess = ev.hessian()
    w0 = ev.w.value
    comps, comps_qe = {}, {}
    f = ev.w.log() * (-float(m))
    hess_f = ev.hessian(f)
    df = [f.diff(i).value for i in range(ev.dim)]
    for i, j in _pairs(ev.dim):
        gij = ev.g[i].value if i == j else 0.0
        ric = ev.cj.ricci[(i, j)].value
        res = hess[(i, j)].value - (w0 / m) * (ric - lam * gij)
        comps[_key((i, j))] = ev.ortho(res, (i, j))
        res_qe = ric + hess_f[(i, j)].value - df[i] * df[j] / m - lam * gij
        comps_qe[_key((i, j))] = ev.ortho(res_qe, (i, j))
    sub = ResidualReport.from_components("m-QE equation, f = -m log w", comps_qe, tol_qe, ev.npts)
    main = ResidualReport.from_components(
        "(lambda, 3+m)-Einstein equation", comps, tol, ev.npts, extra={"mqe_form": sub}
    )
    main.extra["equivalent"] = bool(main.passed == sub.passed)
    return main


# ---------------------------------------------------------------------------
# conserved mu
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MuReport:
    mean: float
    max_deviation: float
    expected: float
    mean_error: float
    grid_size: int
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "identity": "conserved mu",
            "mean": self.mean,
            "max_deviation": self.max_deviation,
            "expected": self.expected,
            "mean_error": self.mean_error,
            "grid_size": self.grid_size,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def mu_field(space, grid):
    ev = _Evaluation(space, grid, order=2)
    return _mu_from_eval(ev)


def _mu_from_eval(ev):
    m, lam = ev.space.m, ev.space.lam
    scal = ev.cj.scalar.value
    w0 = ev.w.value
    return ((scal + (m - N_BASE) * lam) / m) * w0 * w0 + (m - 1) * ev.grad_sq()


def mu_scan(space, grid=None, tol=1e-6):
    """Mean of μ over the grid, its max deviation, and the expected value check."""
    pts = space.default_grid() if grid is None else grid
    mu = np.atleast_1d(mu_field(space, pts))
    mean = float(np.mean(mu))
    dev = float(np.max(np.abs(mu - mean)))
    expected = space.mu_expected
    err = abs(mean - expected) if expected is not None else 0.0
    return MuReport(
        mean=mean,
        max_deviation=dev,
        expected=expected,
        mean_error=float(err),
        grid_size=mu.size,
        tolerance=float(tol),
        passed=bool(dev < tol and err < tol),
    )


# ---------------------------------------------------------------------------
# Codazzi tensor
# ---------------------------------------------------------------------------


def _eigen_pair(ric_ortho):
    """Split orthonormal Ricci eigenvalues into simple λ1 and double λ2."""
    vals = np.linalg.eigvalsh(ric_ortho)
    lower_pair = np.abs(vals[:, 0] - vals[:, 1]) <= np.abs(vals[:, 1] - vals[:, 2])
    lam1 = np.where(lower_pair, vals[:, 2], vals[:, 0])
    lam2 = np.where(lower_pair, 0.5 * (vals[:, 0] + vals[:, 1]), 0.5 * (vals[:, 1] + vals[:, 2]))
    return lam1, lam2, vals


def codazzi_check(space, grid=None, tol=1e-5):
    """max |∇_i C_jk - ∇_j C_ik| and the C-eigenvalues μ1, μ2 per point."""
    if space.dim != 3:
        raise CapabilityError("the Codazzi check is defined for the 3-d base")
    pts = space.default_grid() if grid is None else grid
    ev = _Evaluation(space, pts, order=3)
    m, lam, d = space.m, space.lam, ev.dim
    wpow = ev.w.truncate(1) ** (m + 1)
    phi = wpow
    psi = wpow * ev.cj.scalar.truncate(1) * (-m / (2.0 * (m - 1))) + wpow * (lam / (m - 1))
    C = {}
    for j in range(d):
        for k in range(d):
            val = phi * ev.cj.ricci[(j, k)]
            if j == k:
                val = val + psi * ev.g[j].truncate(1)
            C[(j, k)] = val
    gam = ev.cj.gamma

    def cov(i, j, k):
        out = C[(j, k)].diff(i).value
        for l in range(d):
            g1 = gam.get((l, i, j))
            if g1 is not None:
                out = out - g1.value * C[(l, k)].value
            g2 = gam.get((l, i, k))
            if g2 is not None:
                out = out - g2.value * C[(j, l)].value
        return out

    comps = {}
    for i, j in combinations(range(d), 2):
        for k in range(d):
            comps[f"{i + 1}{j + 1};{k + 1}"] = ev.ortho(cov(i, j, k) - cov(j, i, k), (i, j, k))
    lam1, lam2, vals = _eigen_pair(ev.ricci_ortho())
    phi0, psi0 = phi.value, psi.value
    mu1 = phi0 * lam1 + psi0
    mu2 = phi0 * lam2 + psi0
    c_ortho = np.empty((ev.npts, d, d))
    for a in range(d):
        for b in range(d):
            c_ortho[:, a, b] = ev.ortho(C[(a, b)].value, (a, b))
    c_vals = np.linalg.eigvalsh(c_ortho)
    predicted = np.sort(phi0[:, None] * vals + psi0[:, None], axis=1)
    algebra = float(np.max(np.abs(c_vals - predicted) / np.maximum(1.0, np.abs(predicted))))
    extra = {"mu1": mu1, "mu2": mu2, "eigen_algebra_residual": algebra}
    return ResidualReport.from_components("Codazzi tensor", comps, tol, ev.npts, extra=extra)


# ---------------------------------------------------------------------------
# scalar curvature identity
# ---------------------------------------------------------------------------


def scalar_identity_residual(space, grid=None, tol=1e-5):
    """(w/(2(m-1)))∇R + Rc(∇w, ·) - ((n-1)λ - R)/(m-1) dw, n = 3."""
    pts = space.default_grid() if grid is None else grid
    ev = _Evaluation(space, pts, order=3)
    m, lam, d = space.m, space.lam, ev.dim
    scal = ev.cj.scalar
    w0 = ev.w.value
    dw = [ev.w.diff(i).value for i in range(d)]
    comps = {}
    for i in range(d):
        ric_dw = sum(ev.cj.ricci[(i, l)].value * dw[l] / ev.g[l].value for l in range(d))
        res = (
            w0 / (2.0 * (m - 1)) * scal.diff(i).value
            + ric_dw
            - ((N_BASE - 1) * lam - scal.value) / (m - 1) * dw[i]
        )
        comps[str(i + 1)] = ev.ortho(res, (i,))
    return ResidualReport.from_components("scalar curvature gradient identity", comps, tol, ev.npts)


# ---------------------------------------------------------------------------
# eigenstructure over a grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenGridReport:
    lambda1: np.ndarray
    lambda2: np.ndarray
    multiplicities: tuple
    all_two_distinct: bool
    max_pair_gap: float
    min_split: float

    def to_dict(self):
        return {
            "identity": "Ricci eigenstructure",
            "multiplicities": list(self.multiplicities),
            "pass": self.all_two_distinct,
            "max_pair_gap": self.max_pair_gap,
            "min_split": self.min_split,
            "lambda1_range": [float(np.min(self.lambda1)), float(np.max(self.lambda1))],
        }


def eigen_scan(space, grid=None, tol=1e-7):
    """Checks multiplicities (1, 2) for the Ricci operator at every grid point."""
    pts = space.default_grid() if grid is None else grid
    ev = _Evaluation(space, pts, order=2)
    lam1, lam2, vals = _eigen_pair(ev.ricci_ortho())
    mults = set()
    for row in vals:
        _, _, groups = cluster_eigenvalues(row, tol)
        mults.add(tuple(sorted(len(g) for g in groups)))
    pair_gap = np.minimum(np.abs(vals[:, 0] - vals[:, 1]), np.abs(vals[:, 1] - vals[:, 2]))
    return EigenGridReport(
        lambda1=lam1,
        lambda2=lam2,
        multiplicities=tuple(sorted(mults)),
        all_two_distinct=mults == {(1, 2)},
        max_pair_gap=float(np.max(pair_gap)),
        min_split=float(np.min(np.abs(lam1 - lam2))),
    )


# ---------------------------------------------------------------------------
# adapted frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdaptedFrameData:
    H: float
    alpha: float
    beta: float
    zeta: float
    zeta1: float
    zeta2: float
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float
    e2w: float
    grad_norm: float
    checks: dict

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "H", "alpha", "beta", "zeta", "zeta1", "zeta2",
            "lambda1", "lambda2", "mu1", "mu2", "e2w", "grad_norm",
        )}
        out["checks"] = dict(sorted(self.checks.items()))
        return out


def frame_data(space, point):
    """Connection coefficients of E_i = ∂_i/√g_ii and their cross-checks.

    ``checks`` holds residuals of the Ricci component formulas
    (R11, R22 and R1221 in terms of H, α, β) and of the shape coefficients
    against their geometric values.  Which shape identity applies depends on
    the regime: ζ = H/2 when ∇w spans E1 ("grad-e1"), ζ1 = α and ζ2 = -β
    when it spans E3 ("grad-e3").
    """
    if space.dim != 3:
        raise CapabilityError("adapted frame data are defined for the 3-d base")
    pt = np.asarray(point, dtype=float).reshape(3, 1)
    ev = _Evaluation(space, pt, order=3)
    m, lam = space.m, space.lam
    g = [gi.truncate(2) for gi in ev.g]
    dg = [[gi.diff(a) for a in range(3)] for gi in g]
    root = [gi.sqrt() for gi in g]
    H = (dg[1][0] / g[1] + dg[2][0] / g[2]) / (root[0] * 2.0)
    alpha = dg[0][2] / (g[0] * root[2] * 2.0)
    beta = -(dg[1][2] / (g[1] * root[2] * 2.0))
    e1H = H.diff(0).value / root[0].value
    e3beta = beta.diff(2).value / root[2].value
    Hv, av, bv = H.value, alpha.value, beta.value

    ric = ev.ricci_ortho()[0]
    r11, r22 = ric[0, 0], ric[1, 1]
    riem = ev.cj.riemann.get((0, 1, 1, 0))
    r1221 = riem.value / (ev.g[0].value * ev.g[1].value) if riem is not None else np.zeros(1)
    checks = {}
    if space.regime != "grad-e1":
        # the component formulas assume g11, g33 independent of x2
        checks["R11"] = float(abs(r11 - (-e1H + 2 * av * bv - Hv**2 / 2))[0])
        checks["R22"] = float(abs(r22 - (-e1H / 2 - Hv**2 / 2 + av * bv + e3beta - bv**2))[0])
        checks["R1221"] = float(abs(r1221 - (-e1H / 2 + av * bv - Hv**2 / 4))[0])

    grad_sq = ev.grad_sq()
    grad = float(np.sqrt(grad_sq)[0])
    e2w = float(ev.w.diff(1).value[0] / ev.sqrt_g[1][0])
    lam1, lam2 = float(ric[0, 0]), float(ric[1, 1])
    w0 = float(ev.w.value[0])
    wpow = w0 ** (m + 1)
    scal = float(ev.cj.scalar.value[0])
    psi = wpow * (2 * lam - m * scal) / (2.0 * (m - 1))
    if not grad > 0:
        raise FrameUndefinedError("shape coefficients need a nonzero gradient of w")
    # orient the frame vector that carries ∇w so that it equals ∇w/|∇w|
    axis = {"grad-e1": 0, "grad-e3": 2}.get(space.regime)
    sign = 1.0
    if axis is not None:
        sign = float(np.sign(ev.w.diff(axis).value[0])) or 1.0
    zeta = sign * w0 * (lam2 - lam) / (m * grad)
    zeta1 = sign * (w0 / m) * (r11 - lam) / grad
    zeta2 = sign * (w0 / m) * (r22 - lam) / grad
    if space.regime == "grad-e1":
        checks["zeta-H/2"] = float(abs(zeta - Hv[0] / 2))
    elif space.regime == "grad-e3":
        checks["zeta1-alpha"] = float(abs(zeta1 - av[0]))
        checks["zeta2+beta"] = float(abs(zeta2 + bv[0]))
    return AdaptedFrameData(
        H=float(Hv[0]),
        alpha=float(av[0]),
        beta=float(bv[0]),
        zeta=float(zeta),
        zeta1=float(zeta1),
        zeta2=float(zeta2),
        lambda1=lam1,
        lambda2=lam2,
        mu1=wpow * lam1 + psi,
        mu2=wpow * lam2 + psi,
        e2w=e2w,
        grad_norm=grad,
        checks=checks,
    )


# ---------------------------------------------------------------------------
# full suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerificationBundle:
    label: str
    reports: dict
    passed: bool

    def to_dict(self):
        return {
            "label": self.label,
            "pass": self.passed,
            "reports": {k: v.to_dict() for k, v in sorted(self.reports.items())},
        }


def verify_space(space, grid=None, tol=1e-6, tol_codazzi=1e-5, tol_eigen=1e-7):
    """Run every check on one grid and combine the pass flags."""
    pts = space.default_grid() if grid is None else grid
    reports = {
        "qe_residual": qe_residual(space, pts, tol=tol),
        "mu_scan": mu_scan(space, pts, tol=tol),
        "codazzi": codazzi_check(space, pts, tol=tol_codazzi),
        "scalar_identity": scalar_identity_residual(space, pts, tol=tol_codazzi),
        "eigenstructure": eigen_scan(space, pts, tol=tol_eigen),
    }
    ok = True
    for key, rep in reports.items():
        flag = rep.all_two_distinct if key == "eigenstructure" else rep.passed
        if key == "qe_residual":
            flag = flag and rep.extra["mqe_form"].passed
        ok = ok and bool(flag)
    return VerificationBundle(label=space.label, reports=reports, passed=ok)
