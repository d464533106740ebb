"""Assemble chart-level spaces from profile solutions.

Coordinates are (x1, x2, x3) throughout.  Family metrics:

* case 1:  dx1² + η(x1)² p'(x3)² dx2² + η(x1)² dx3²,   w = p η
* case 2:  p(x3)² dx1² + p'(x3)² dx2² + dx3²,          w = τ(x1) p
* (i-3):   dx1² + w'(x3)² dx2² + dx3²,                 w = w(x3)
* (ii-3):  the case-2 metric with w = c1 p
* LCF:     ds² + h(s)² (dx2² + sn_k(x2)² dx3²),        w = w(s)

Einstein blocks of the warped products are checked with the 4-d curvature
engine plus 1-d warped-product Ricci formulas for the extra dimension.
"""

from dataclasses import dataclass

import numpy as np

from .classifier import Case1, Case2, CaseI3, CaseII3, classify, initial_slope
from .errors import (
    CapabilityError,
    DomainError,
    FiberMismatchError,
    InconsistentBuildError,
    InvalidProfileError,
)
from .fields import (
    AxisField,
    ConstantField,
    OscillatorProfile,
    Profile,
    sn_profile,
)
from .geometry import CoordChart, DiagonalMetric, curvature_jets
from .ode import EtaProfile, LCFSystem, TauProfile, integrate
from .verifier import QESpace, ResidualReport

LEVEL_TOL = 1e-8
SYSTEM_TOL = 1e-8
ODE_STEP = 1e-3
SPAN_MARGIN = 1.0


# ---------------------------------------------------------------------------
# profile preparation
# ---------------------------------------------------------------------------


def _sample(lo, hi, n=7):
    return np.linspace(lo, hi, n)


def _check_level(problem, profile, lo, hi, name):
    s = _sample(lo, hi)
    y, dy = profile.tower(s, 1)
    fi = np.asarray(problem.first_integral([y], [dy]), dtype=float)
    err = float(np.max(np.abs(fi - problem.level)))
    if err > LEVEL_TOL * max(1.0, abs(problem.level)):
        raise InconsistentBuildError(
            f"{name} profile misses its first-integral level {problem.level!r} by {err:.3e}"
        )


def _linear_profile(problem, c, init, name):
    y0, y1 = float(init[0]), float(init[1])
    fi = float(problem.first_integral([y0], [y1]))
    if abs(fi - problem.level) > LEVEL_TOL * max(1.0, abs(problem.level)):
        raise InconsistentBuildError(
            f"{name} initial data give level {fi!r}, declared {problem.level!r}"
        )
    return OscillatorProfile(c, y0, y1)


def canonical_eta_init(lam, m, rho):
    """Standard initial data for η'' = cη with level ρ, c = -λ/(m+2)."""
    c = -lam / (m + 2)
    if c > 0:
        if rho == 0:
            return 1.0, float(np.sqrt(c))
        if rho < 0:
            return float(np.sqrt(-rho / c)), 0.0
        return 0.0, float(np.sqrt(rho))
    # λ >= 0: η' is bounded by the level, start at η = 1
    sq = rho - lam / (m + 2)
    if sq < 0:
        raise InconsistentBuildError("no eta with eta(0) = 1 reaches this level")
    return 1.0, float(np.sqrt(sq))


def canonical_tau_init(k, m, mu):
    """Standard initial data for τ'' = -kτ with level μ/(m-1)."""
    level = mu / (m - 1)
    if mu > 0:
        return 0.0, float(np.sqrt(level))
    if mu < 0 and k < 0:
        return float(np.sqrt(level / k)), 0.0
    if mu == 0 and k < 0:
        return 1.0, float(np.sqrt(-k))
    if mu == 0 and k == 0:
        return 1.0, 0.0
    raise InconsistentBuildError("no positive tau solves the tau first integral")


def _solve_p(params, lo, hi, step=ODE_STEP):
    slope = initial_slope(params)
    if slope is None:
        raise InconsistentBuildError("first-integral level is unreachable from p0")
    span = (min(0.0, lo) - SPAN_MARGIN, max(0.0, hi) + SPAN_MARGIN)
    try:
        sol = integrate(params.problem(), (params.p0, slope), step=step, span=span)
    except DomainError as exc:
        raise InconsistentBuildError(str(exc)) from exc
    s_lo, s_hi = sol.span
    if s_lo > lo - 0.01 or s_hi < hi + 0.01:
        raise InconsistentBuildError(
            f"profile only exists on [{s_lo:.3f}, {s_hi:.3f}], chart needs [{lo}, {hi}]"
        )
    return sol


def _profile(value, problem, lo, hi, name, fallback):
    """Resolve a user profile, an (value, slope) init, or the default."""
    if value is None:
        return fallback()
    if isinstance(value, Profile):
        _check_level(problem, value, lo, hi, name)
        return value
    return fallback(tuple(value))


# ---------------------------------------------------------------------------
# family spaces
# ---------------------------------------------------------------------------


def _chart(chart):
    if isinstance(chart, CoordChart):
        return chart
    return CoordChart(tuple(tuple(r) for r in chart))


def _regime(params):
    return "grad-e3" if isinstance(params, (CaseI3, CaseII3)) else "not-eigen"


def _label(params, label):
    return classify(params).label if label is None else label


def build_space(label, params, profiles=None, chart=None, step=ODE_STEP):
    """QESpace for a classified family.

    ``profiles`` may map "p", "eta", "tau" or "w" to a :class:`Profile` or to
    initial data (value, slope); missing entries are solved from ``params``.
    """
    profiles = dict(profiles or {})
    if chart is None:
        raise ValueError("a coordinate chart is required")
    chart = _chart(chart)
    if chart.dim != 3:
        raise ValueError("family spaces live on a 3-d chart")
    (x1lo, x1hi), _, (x3lo, x3hi) = chart.ranges
    m = params.m
    label = _label(params, label)
    info = {"family": params.family, **{k: v for k, v in vars(params).items()}}

    if isinstance(params, CaseI3):
        prob = params.problem()
        wprof = _profile(profiles.get("w"), prob, x3lo, x3hi, "w",
                         lambda init=None: _solve_p(params if init is None else _with_init(params, init),
                                                    x3lo, x3hi, step))
        w = AxisField(wprof, 2, 3)
        dw = AxisField(wprof.derivative(), 2, 3)
        one = ConstantField(1.0, 3)
        metric = DiagonalMetric(chart, (one, dw**2, one))
        return QESpace(metric, w, 0.0, m, params.mu, _regime(params), label, info)

    prob = params.problem()
    pprof = _profile(profiles.get("p"), prob, x3lo, x3hi, "p",
                     lambda init=None: _solve_p(params if init is None else _with_init(params, init),
                                                x3lo, x3hi, step))
    p = AxisField(pprof, 2, 3)
    dp = AxisField(pprof.derivative(), 2, 3)

    if isinstance(params, Case1):
        eprob = EtaProfile(params.lam, m, level=params.rho)
        c = -params.lam / (m + 2)
        eprof = _profile(profiles.get("eta"), eprob, x1lo, x1hi, "eta",
                         lambda init=None: _linear_profile(
                             eprob, c, init or canonical_eta_init(params.lam, m, params.rho), "eta"))
        eta = AxisField(eprof, 0, 3)
        metric = DiagonalMetric(chart, (ConstantField(1.0, 3), eta**2 * dp**2, eta**2))
        return QESpace(metric, p * eta, params.lam, m, params.mu, _regime(params), label, info)

    metric = DiagonalMetric(chart, (p**2, dp**2, ConstantField(1.0, 3)))
    if isinstance(params, CaseII3):
        c1 = float(profiles.get("c1", 1.0))
        if not c1 > 0:
            raise InconsistentBuildError("c1 must be positive")
        info["c1"] = c1
        return QESpace(metric, p * c1, params.lam, m, 0.0, _regime(params), label, info)

    tprob = TauProfile(params.k, m, level=params.mu / (m - 1))
    tprof = _profile(profiles.get("tau"), tprob, x1lo, x1hi, "tau",
                     lambda init=None: _linear_profile(
                         tprob, -params.k, init or canonical_tau_init(params.k, m, params.mu), "tau"))
    tau = AxisField(tprof, 0, 3)
    return QESpace(metric, tau * p, params.lam, m, params.mu, _regime(params), label, info)


def _with_init(params, init):
    """Parameter copy whose p0 and slope sign come from explicit initial data."""
    value, slope = init
    kw = dict(vars(params))
    key = "w0" if isinstance(params, CaseI3) else "p0"
    kw[key] = float(value)
    kw["slope_sign"] = 1 if slope >= 0 else -1
    out = type(params)(**kw)
    got = initial_slope(out)
    if got is None or abs(abs(got) - abs(slope)) > 1e-9 * max(1.0, abs(slope)):
        raise InconsistentBuildError("initial slope is off the first-integral level")
    return out


# ---------------------------------------------------------------------------
# locally conformally flat family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LCFProfiles:
    h: Profile
    w: Profile
    k_section: float
    lam: float
    m: int


def lcf_system_residual(profiles, s):
    """Residuals of the two profile equations at the sample points ``s``."""
    h, dh, d2h = profiles.h.tower(s, 2)
    w, dw, d2w = profiles.w.tower(s, 2)
    m, lam, k = profiles.m, profiles.lam, profiles.k_section
    if np.any(h <= 0) or np.any(w <= 0):
        raise InvalidProfileError("h and w must be positive on the span")
    first = m * (dw / w) * (dh / h) + d2h / h + (dh / h) ** 2 - k / h**2 + lam
    second = m * d2w / w + 2 * d2h / h + lam
    return np.abs(first), np.abs(second)


def build_lcf_space(profiles, chart, label="lcf", tol=SYSTEM_TOL, mu_expected=None):
    """g = ds² + h²(dx2² + sn_k(x2)² dx3²) with potential w(s)."""
    chart = _chart(chart)
    if chart.dim != 3:
        raise ValueError("LCF spaces live on a 3-d chart")
    (slo, shi) = chart.ranges[0]
    s = np.linspace(slo, shi, 41)
    r1, r2 = lcf_system_residual(profiles, s)
    worst = float(max(r1.max(), r2.max()))
    if worst > tol:
        raise InvalidProfileError(f"profile system residual {worst:.3e} exceeds {tol:.1e}")
    h = AxisField(profiles.h, 0, 3)
    sn = AxisField(sn_profile(profiles.k_section), 1, 3)
    metric = DiagonalMetric(chart, (ConstantField(1.0, 3), h**2, h**2 * sn**2))
    w = AxisField(profiles.w, 0, 3)
    info = {"family": "lcf", "k": profiles.k_section, "lam": profiles.lam, "m": profiles.m}
    return QESpace(metric, w, profiles.lam, profiles.m, mu_expected, "grad-e1", label, info)


def shoot_lcf(lam, m, k, init, span, step=ODE_STEP):
    """Integrate the LCF profile system from ((h, w), (h', w')) at s = 0."""
    (h0, dh0, w0, dw0) = init
    sol = integrate(LCFSystem(lam, m, k), ((h0, w0), (dh0, dw0)), step=step, span=span)
    if sol.early_exit:
        raise InvalidProfileError(f"LCF profiles left the admissible band: {sol.exits}")
    return LCFProfiles(sol.component(0), sol.component(1), k, lam, m), sol


def build_lcf_shooting(lam, m, k, init, chart, step=ODE_STEP, label="lcf-shooting"):
    chart = _chart(chart)
    lo, hi = chart.ranges[0]
    span = (min(0.0, lo) - 0.05, max(0.0, hi) + 0.05)
    profiles, sol = shoot_lcf(lam, m, k, init, span, step)
    return build_lcf_space(profiles, chart, label=label, mu_expected=sol.level)


# ---------------------------------------------------------------------------
# Einstein blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EinsteinMetric:
    metric: DiagonalMetric
    lambda_target: float
    label: str = ""

    @property
    def dim(self):
        return self.metric.dim


def _fiber(mu, dim, warp, theta_axis):
    """Two fiber components warp²·g_F with Rc(g_F) = μ g_F."""
    if mu > 0:
        sin = AxisField(OscillatorProfile(-1.0, 0.0, 1.0), theta_axis, dim)
        return warp**2 / mu, warp**2 * sin**2 / mu
    if mu == 0:
        return warp**2, warp**2
    raise FiberMismatchError("mu < 0 needs a hyperbolic fiber, which is not modeled")


def build_einstein_block(label, params, profiles=None, fiber_dim=2, chart=None, step=ODE_STEP):
    """The Einstein block of the warped product over a classified family.

    Case 1 and (i-3): g0 = p'(x3)² dx2² + dx3² + p² g_F on (x2, x3, θ, φ),
    Einstein with constant (m+1)ρ (ρ = 0 for the potential family).
    Case 2 and (ii-3): g~ = dx1² + τ(x1)² g_F on (x1, θ, φ), constant k m.
    """
    if fiber_dim != 2 or params.m != 2:
        raise CapabilityError("Einstein blocks are built for a 2-d fiber only")
    profiles = dict(profiles or {})
    m = params.m
    if isinstance(params, (Case1, CaseI3)):
        if chart is None:
            chart = ((0.0, 2 * np.pi), (0.5, 2.5), (0.5, 2.5), (0.0, 1.0))
        chart = _chart(chart)
        lo, hi = chart.ranges[1]
        pkey = "w" if isinstance(params, CaseI3) else "p"
        pprof = profiles.get(pkey)
        if pprof is None or not isinstance(pprof, Profile):
            pprof = _solve_p(params, lo, hi, step)
        if "scale" in profiles:
            pprof = _ScaledProfile(pprof, float(profiles["scale"]))
        p = AxisField(pprof, 1, 4)
        dp = AxisField(pprof.derivative(), 1, 4)
        g_th, g_ph = _fiber(params.mu, 4, p, 2)
        metric = DiagonalMetric(chart, (dp**2, ConstantField(1.0, 4), g_th, g_ph))
        rho = params.rho if isinstance(params, Case1) else 0.0
        return EinsteinMetric(metric, (m + 1) * rho, label or "g0")

    if chart is None:
        chart = ((0.3, 1.5), (0.5, 2.5), (0.0, 1.0))
    chart = _chart(chart)
    if isinstance(params, CaseII3):
        tprof = OscillatorProfile(0.0, float(profiles.get("c1", 1.0)), 0.0)
        k, mu = 0.0, 0.0
    else:
        k, mu = params.k, params.mu
        tprob = TauProfile(k, m, level=mu / (m - 1))
        tprof = profiles.get("tau") or _linear_profile(tprob, -k, canonical_tau_init(k, m, mu), "tau")
    tau = AxisField(tprof, 0, 3)
    g_th, g_ph = _fiber(mu, 3, tau, 1)
    metric = DiagonalMetric(chart, (ConstantField(1.0, 3), g_th, g_ph))
    return EinsteinMetric(metric, k * m, label or "g~")


class _ScaledProfile(Profile):
    """c·f, used for perturbed negative controls."""

    def __init__(self, base, c):
        self.base = base
        self.c = c
        self.provenance = base.provenance

    def tower(self, s, order):
        return [self.c * d for d in self.base.tower(s, order)]


def einstein_residual(block, grid=None, tol=1e-5):
    """max |Rc - λ g| in orthonormal components over the grid."""
    metric = block.metric if isinstance(block, EinsteinMetric) else block
    target = block.lambda_target if isinstance(block, EinsteinMetric) else 0.0
    if metric.dim > 4:
        raise CapabilityError("the curvature engine handles dimension <= 4")
    pts = metric.chart.grid_points(9) if grid is None else grid
    cj = curvature_jets(metric, pts, order=2)
    gv = [g.value for g in cj.g] if hasattr(cj, "g") else metric.values(pts)
    d = metric.dim
    comps = {}
    for i in range(d):
        for j in range(i, d):
            val = cj.ricci[(i, j)].value - (target * gv[i] if i == j else 0.0)
            comps[f"{i + 1}{j + 1}"] = val / np.sqrt(gv[i] * gv[j])
    npts = np.asarray(pts).reshape(d, -1).shape[1]
    return ResidualReport.from_components(
        f"Einstein, Rc = {target:g} g", comps, tol, npts, extra={"target": float(target)}
    )


# ---------------------------------------------------------------------------
# warped-product reductions for the extra dimension
# ---------------------------------------------------------------------------


def warped_ricci(eta_tower, c, n):
    """Ricci of dt² + η(t)² g0 where g0 is n-dimensional with Rc = c g0.

    Returns the tt component and the orthonormal fiber eigenvalue.
    """
    eta, d1, d2 = eta_tower
    tt = -n * d2 / eta
    fiber = c / eta**2 - d2 / eta - (n - 1) * (d1 / eta) ** 2
    return tt, fiber


def doubly_warped_ricci(a_tower, b_tower, c, n):
    """Ricci of dr² + A(r)² dθ² + B(r)² ĝ with ĝ n-dimensional, Rc = c ĝ.

    Returns orthonormal (rr, θθ, fiber) eigenvalues.
    """
    A, dA, d2A = a_tower
    B, dB, d2B = b_tower
    rr = -d2A / A - n * d2B / B
    th = -d2A / A - n * dA * dB / (A * B)
    fib = c / B**2 - d2B / B - dA * dB / (A * B) - (n - 1) * (dB / B) ** 2
    return rr, th, fib


@dataclass(frozen=True)
class ReductionReport:
    identity: str
    target: float
    max_residual: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "identity": self.identity,
            "target": self.target,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def case1_total_space_check(params, s, eta=None, tol=1e-6):
    """dx1² + η² g0 is Einstein with constant λ when g0 has constant (m+1)ρ."""
    m = params.m
    if eta is None:
        eprob = EtaProfile(params.lam, m, level=params.rho)
        eta = _linear_profile(eprob, -params.lam / (m + 2), canonical_eta_init(params.lam, m, params.rho), "eta")
    tt, fib = warped_ricci(eta.tower(s, 2), (m + 1) * params.rho, m + 2)
    worst = float(max(np.max(np.abs(tt - params.lam)), np.max(np.abs(fib - params.lam))))
    return ReductionReport("warped product dt² + η² g0", params.lam, worst, tol, worst < tol)


def case2_total_space_check(params, s, p=None, step=ODE_STEP, tol=1e-6):
    """p² g~ + p'² dx2² + dx3² is Einstein with constant λ when Rc(g~) = k m g~."""
    m = params.m
    if p is None:
        p = _solve_p(params, float(np.min(s)), float(np.max(s)), step)
    s = np.asarray(s, dtype=float)
    # the formula divides by p', so samples on the polar axis are skipped
    keep = np.abs(p.tower(s, 1)[1]) > 1e-6
    if not np.any(keep):
        raise ValueError("every sample lies on the axis p' = 0")
    tower = p.tower(s[keep], 3)
    rr, th, fib = doubly_warped_ricci(tower[1:4], tower[0:3], params.k * m, m + 1)
    worst = float(max(np.max(np.abs(r - params.lam)) for r in (rr, th, fib)))
    return ReductionReport("doubly warped dr² + p'² dθ² + p² g~", params.lam, worst, tol, worst < tol)


__all__ = [
    "EinsteinMetric",
    "LCFProfiles",
    "ReductionReport",
    "build_einstein_block",
    "build_lcf_shooting",
    "build_lcf_space",
    "build_space",
    "canonical_eta_init",
    "canonical_tau_init",
    "case1_total_space_check",
    "case2_total_space_check",
    "doubly_warped_ricci",
    "einstein_residual",
    "lcf_system_residual",
    "shoot_lcf",
    "warped_ricci",
]
