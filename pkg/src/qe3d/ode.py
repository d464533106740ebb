"""Profile ODEs: fixed-step RK4 integration, first integrals and root finding.

Every family is autonomous and second order, ``y'' = F(y, y')``.  The
right-hand sides are written with plain arithmetic so the same code runs on
floats (for the integrator) and on :class:`~qe3d.jets.Jet` objects (for the
Taylor recursion that supplies analytic derivative towers at any point).
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import (
    ConeSingularError,
    DomainError,
    NotAxisClosableError,
    SingularProfileError,
)
from .fields import ODE_BACKED, OscillatorProfile, Profile
from .jets import Jet

DENSE_ORDER = 8
CONSISTENCY_TOL = 1e-12


# ---------------------------------------------------------------------------
# problem families
# ---------------------------------------------------------------------------


class ProfileProblem:
    """Base class; subclasses are frozen dataclasses."""

    kind = None
    n_components = 1
    level_name = None

    def rhs(self, y, v):
        raise NotImplementedError

    def first_integral(self, y, v):
        raise NotImplementedError

    def with_level(self, level):
        return type(self)(**{**self.params(), "level": level})

    def params(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def _check_m(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")


@dataclass(frozen=True)
class KobayashiP(ProfileProblem):
    """p'' = a p^-m - rho p with (p')^2 + rho p^2 + 2a/(m-1) p^(1-m) = mu/(m-1)."""

    rho: float
    a: float
    m: int
    level: float = None
    kind = "kobayashi-p"
    level_name = "mu/(m-1)"

    def __post_init__(self):
        self._check_m()

    def rhs(self, y, v):
        (p,) = y
        return [self.a * p ** (-self.m) - self.rho * p]

    def first_integral(self, y, v):
        (p,), (dp,) = y, v
        return dp * dp + self.rho * p * p + (2.0 * self.a / (self.m - 1)) * p ** (1 - self.m)


@dataclass(frozen=True)
class EtaProfile(ProfileProblem):
    """eta'' = -lam/(m+2) eta with (eta')^2 + lam/(m+2) eta^2 = rho."""

    lam: float
    m: int
    level: float = None
    kind = "eta"
    level_name = "rho"

    def __post_init__(self):
        self._check_m()

    def rhs(self, y, v):
        return [y[0] * (-self.lam / (self.m + 2))]

    def first_integral(self, y, v):
        (e,), (de,) = y, v
        return de * de + (self.lam / (self.m + 2)) * e * e


@dataclass(frozen=True)
class RadialP(ProfileProblem):
    """p'' = a p^(-m-1) - lam/(m+2) p with (p')^2 + lam/(m+2) p^2 + 2a/m p^-m = k."""

    lam: float
    a: float
    m: int
    level: float = None
    kind = "radial-p"
    level_name = "k"

    def __post_init__(self):
        self._check_m()

    def rhs(self, y, v):
        (p,) = y
        return [self.a * p ** (-self.m - 1) - (self.lam / (self.m + 2)) * p]

    def first_integral(self, y, v):
        (p,), (dp,) = y, v
        return dp * dp + (self.lam / (self.m + 2)) * p * p + (2.0 * self.a / self.m) * p ** (-self.m)


@dataclass(frozen=True)
class TauProfile(ProfileProblem):
    """tau'' = -k tau with (tau')^2 + k tau^2 = mu/(m-1)."""

    k: float
    m: int
    level: float = None
    kind = "tau"
    level_name = "mu/(m-1)"

    def __post_init__(self):
        self._check_m()

    def rhs(self, y, v):
        return [y[0] * (-self.k)]

    def first_integral(self, y, v):
        (t,), (dt,) = y, v
        return dt * dt + self.k * t * t


@dataclass(frozen=True)
class PotentialW(ProfileProblem):
    """w'' = a w^-m with (w')^2 + 2a/(m-1) w^(1-m) = mu/(m-1)."""

    a: float
    m: int
    level: float = None
    kind = "potential-w"
    level_name = "mu/(m-1)"

    def __post_init__(self):
        self._check_m()

    def rhs(self, y, v):
        (w,) = y
        return [self.a * w ** (-self.m)]

    def first_integral(self, y, v):
        (w,), (dw,) = y, v
        return dw * dw + (2.0 * self.a / (self.m - 1)) * w ** (1 - self.m)


@dataclass(frozen=True)
class LCFSystem(ProfileProblem):
    """Warped profile system for g = ds^2 + h^2 g~ with g~ of curvature k.

    Unknowns are (h, w).  The h-equation is solved for h'', then the
    w-equation gives w''.  The monitored first integral is the constant mu
    of the potential, which is conserved along exact solutions.
    """

    lam: float
    m: int
    k: float
    level: float = None
    kind = "lcf"
    n_components = 2
    level_name = "mu"

    def __post_init__(self):
        self._check_m()

    def rhs(self, y, v):
        h, w = y
        dh, dw = v
        m, lam = self.m, self.lam
        rh = dh / h
        hpp_over_h = -m * (dw / w) * rh - rh * rh + self.k / (h * h) - lam
        wpp = (w / m) * (hpp_over_h * (-2.0) - lam)
        return [hpp_over_h * h, wpp]

    def first_integral(self, y, v):
        h, w = y
        dh, dw = v
        hpp, _ = self.rhs(y, v)
        scal = -4.0 * hpp / h - 2.0 * (dh / h) ** 2 + 2.0 * self.k / (h * h)
        m = self.m
        return ((scal + (m - 3) * self.lam) / m) * w * w + (m - 1) * dw * dw


PROBLEMS = {
    cls.kind: cls for cls in (KobayashiP, EtaProfile, RadialP, TauProfile, PotentialW, LCFSystem)
}


def first_integral(problem, value, slope):
    """Left-hand side of the family's first-integral equation."""
    value = np.atleast_1d(np.asarray(value, dtype=float)) if problem.n_components > 1 else value
    if np.any(np.asarray(value) <= 0):
        raise DomainError("first integral needs a positive value")
    if problem.n_components == 1:
        return problem.first_integral([value], [slope])
    return problem.first_integral(list(value), list(slope))


# ---------------------------------------------------------------------------
# Taylor recursion through the ODE
# ---------------------------------------------------------------------------


def taylor_coefficients(problem, y0, y1, order):
    """Taylor coefficients c[comp][n] of the solution through (y0, y1).

    y0 and y1 are sequences (one entry per component) of arrays sharing a
    batch shape.  Returns an array of shape (n_components, order + 1, *batch).
    """
    y0 = [np.asarray(v, dtype=float) for v in y0]
    y1 = [np.asarray(v, dtype=float) for v in y1]
    batch = np.broadcast_shapes(*(v.shape for v in y0 + y1))
    nc = len(y0)
    coef = np.zeros((nc, max(order, 1) + 1) + batch)
    for c in range(nc):
        coef[c, 0] = y0[c]
        coef[c, 1] = y1[c]
    for n in range(2, order + 1):
        jo = n - 2
        ys, vs = [], []
        for c in range(nc):
            full = Jet(coef[c, : jo + 2], 1, jo + 1)
            ys.append(full.truncate(jo))
            vs.append(full.diff(0))
        acc = problem.rhs(ys, vs)
        for c in range(nc):
            a = acc[c]
            top = a.c[jo] if isinstance(a, Jet) else (np.asarray(a) if jo == 0 else 0.0)
            coef[c, n] = top / (n * (n - 1))
    return coef[:, : order + 1]


def derivative_tower(problem, y0, y1, order):
    """[y, y', ..., y^(order)] per component from (value, slope)."""
    coef = taylor_coefficients(problem, y0, y1, order)
    return [[factorial(k) * coef[c, k] for k in range(order + 1)] for c in range(coef.shape[0])]


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _rk4_step(problem, y, v, h):
    def f(yy, vv):
        return vv, problem.rhs(yy, vv)

    n = len(y)
    k1y, k1v = f(y, v)
    y2 = [y[i] + 0.5 * h * k1y[i] for i in range(n)]
    v2 = [v[i] + 0.5 * h * k1v[i] for i in range(n)]
    k2y, k2v = f(y2, v2)
    y3 = [y[i] + 0.5 * h * k2y[i] for i in range(n)]
    v3 = [v[i] + 0.5 * h * k2v[i] for i in range(n)]
    k3y, k3v = f(y3, v3)
    y4 = [y[i] + h * k3y[i] for i in range(n)]
    v4 = [v[i] + h * k3v[i] for i in range(n)]
    k4y, k4v = f(y4, v4)
    ny = [y[i] + h / 6.0 * (k1y[i] + 2 * k2y[i] + 2 * k3y[i] + k4y[i]) for i in range(n)]
    nv = [v[i] + h / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]) for i in range(n)]
    return ny, nv


def _march(problem, y, v, h, nsteps, floor, ceiling):
    ys, vs = [], []
    reason = None
    for _ in range(nsteps):
        try:
            y, v = _rk4_step(problem, y, v, h)
        except (ZeroDivisionError, OverflowError):
            reason = "nonfinite"
            break
        if not all(np.isfinite(q) for q in y + v):
            reason = "nonfinite"
            break
        lo, hi = min(y), max(y)
        if lo < floor:
            reason = "floor"
            break
        if hi > ceiling:
            reason = "ceiling"
            break
        ys.append(y)
        vs.append(v)
    return ys, vs, reason


class SystemSolution(Profile):
    """Immutable result of :func:`integrate`.

    ``values[c]`` and ``slopes[c]`` hold component ``c`` on the node grid
    ``s``.  Between nodes the solution is reconstructed from a Taylor
    expansion at the nearest node, generated through the ODE itself.
    """

    provenance = ODE_BACKED

    def __init__(self, problem, s, values, slopes, level, step, exits):
        self.problem = problem
        self.s = s
        self.values = values
        self.slopes = slopes
        self.level = float(level)
        self.step = float(step)
        self.exits = exits
        for arr in (s, values, slopes):
            arr.setflags(write=False)
        fi = problem.first_integral(list(values), list(slopes))
        self.drift = np.abs(np.asarray(fi, dtype=float) - self.level)
        self.drift.setflags(write=False)

    # summary -------------------------------------------------------------
    @property
    def span(self):
        return float(self.s[0]), float(self.s[-1])

    @property
    def length(self):
        return float(self.s[-1] - self.s[0])

    @property
    def max_drift(self):
        return float(np.max(self.drift))

    @property
    def drift_rate(self):
        """Max drift per unit of integrated arclength."""
        return self.max_drift / self.length if self.length > 0 else 0.0

    @property
    def positivity_floor(self):
        return float(np.min(self.values))

    @property
    def early_exit(self):
        return any(r is not None for r in self.exits.values())

    # dense evaluation ----------------------------------------------------
    def _locate(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.span
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if np.any(s < lo - slack) or np.any(s > hi + slack):
            raise DomainError(f"s outside the integrated span [{lo}, {hi}]")
        idx = np.clip(np.rint((s - lo) / self.step).astype(int), 0, len(self.s) - 1)
        return s, idx

    def state(self, s):
        """(values, slopes) per component at arbitrary s inside the span."""
        s, idx = self._locate(s)
        t = s - self.s[idx]
        y0 = [self.values[c][idx] for c in range(self.values.shape[0])]
        y1 = [self.slopes[c][idx] for c in range(self.values.shape[0])]
        coef = taylor_coefficients(self.problem, y0, y1, DENSE_ORDER)
        vals, slopes = [], []
        for c in range(coef.shape[0]):
            val = np.zeros_like(t)
            der = np.zeros_like(t)
            for n in range(DENSE_ORDER, -1, -1):
                val = val * t + coef[c, n]
                if n >= 1:
                    der = der * t + n * coef[c, n]
            vals.append(val)
            slopes.append(der)
        return vals, slopes

    def component_tower(self, s, order, comp=0):
        vals, slopes = self.state(s)
        return derivative_tower(self.problem, vals, slopes, order)[comp]

    def tower(self, s, order):
        return self.component_tower(s, order, 0)

    def component(self, comp):
        return _ComponentProfile(self, comp)


class _ComponentProfile(Profile):
    provenance = ODE_BACKED

    def __init__(self, solution, comp):
        self.solution = solution
        self.comp = comp

    def tower(self, s, order):
        return self.solution.component_tower(s, order, self.comp)


class ProfileSolution(SystemSolution):
    """Scalar profile with node arrays value, d1, d2, d3 and drift trace."""

    def __init__(self, *args):
        super().__init__(*args)
        tower = derivative_tower(self.problem, [self.values[0]], [self.slopes[0]], 3)[0]
        self.value, self.d1, self.d2, self.d3 = (np.asarray(a, dtype=float) for a in tower)
        for arr in (self.value, self.d1, self.d2, self.d3):
            arr.setflags(write=False)

    @property
    def roots_of_d1(self):
        return derivative_roots(self).roots


def integrate(problem, init, step=1e-3, span=(-10.0, 10.0), floor=1e-6, ceiling=1e9):
    """Integrate from s = 0 in both directions over ``span`` with fixed RK4.

    ``init`` is (value0, slope0) for scalar problems or
    ((y0_1, ..., y0_n), (y1_1, ..., y1_n)) for systems.  When the problem
    carries a ``level`` the initial data must sit on it; otherwise the level
    is read off the initial data.
    """
    if not 0 < step <= 0.1:
        raise ValueError("step must lie in (0, 0.1]")
    lo, hi = float(span[0]), float(span[1])
    if lo > 0 or hi < 0:
        raise ValueError("span must contain the initial point s = 0")
    if problem.n_components == 1:
        y0, v0 = [float(init[0])], [float(init[1])]
    else:
        y0 = [float(x) for x in init[0]]
        v0 = [float(x) for x in init[1]]
    if min(y0) <= 0:
        raise DomainError("initial value must be positive")
    if min(y0) < floor or max(y0) > ceiling:
        raise SingularProfileError("initial value outside the admissible band", "floor" if min(y0) < floor else "ceiling")
    fi0 = float(problem.first_integral(y0, v0))
    if problem.level is None:
        level = fi0
    else:
        level = float(problem.level)
        if abs(fi0 - level) > CONSISTENCY_TOL * max(1.0, abs(level)):
            raise DomainError(
                f"initial data give first integral {fi0!r}, declared level is {level!r}"
            )
    n_hi = int(round(hi / step))
    n_lo = int(round(-lo / step))
    fy, fv, up_reason = _march(problem, list(y0), list(v0), step, n_hi, floor, ceiling)
    by, bv, down_reason = _march(problem, list(y0), list(v0), -step, n_lo, floor, ceiling)
    stuck_up = n_hi > 0 and not fy and up_reason is not None
    stuck_down = n_lo > 0 and not by and down_reason is not None
    if (stuck_up or n_hi == 0) and (stuck_down or n_lo == 0) and (stuck_up or stuck_down):
        raise SingularProfileError(
            "profile left the admissible band on the first step", up_reason or down_reason
        )
    ys = by[::-1] + [y0] + fy
    vs = bv[::-1] + [v0] + fv
    s = (np.arange(len(ys)) - len(by)) * step
    values = np.array(ys, dtype=float).T
    slopes = np.array(vs, dtype=float).T
    exits = {"lower": down_reason, "upper": up_reason}
    cls = ProfileSolution if problem.n_components == 1 else SystemSolution
    return cls(problem, s, values, slopes, level, step, exits)


# ---------------------------------------------------------------------------
# roots, axis closure, oscillation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootReport:
    roots: tuple
    degenerate: bool
    min_abs_d1: float

    @property
    def count(self):
        return len(self.roots)


def _bisect(fn, a, b, fa, tol=1e-12, maxit=200):
    for _ in range(maxit):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def derivative_roots(solution, tol=1e-12):
    """Roots of the first derivative: sign-change brackets refined by bisection."""
    d1 = np.asarray(solution.d1)
    scale = max(1.0, float(np.max(np.abs(solution.value))))
    min_abs = float(np.min(np.abs(d1)))
    if np.max(np.abs(d1)) <= 1e-12 * scale:
        return RootReport(roots=(), degenerate=True, min_abs_d1=min_abs)

    def slope_at(x):
        return float(solution.tower(np.array(x), 1)[1])

    s = solution.s
    roots = []
    zero = d1 == 0.0
    for n in range(len(s) - 1):
        if zero[n]:
            roots.append(float(s[n]))
        elif not zero[n + 1] and d1[n] * d1[n + 1] < 0:
            roots.append(float(_bisect(slope_at, s[n], s[n + 1], d1[n], tol)))
    if zero[-1]:
        roots.append(float(s[-1]))
    return RootReport(roots=tuple(roots), degenerate=False, min_abs_d1=min_abs)


@dataclass(frozen=True)
class AxisClosure:
    root: float
    d2: float
    period: float


def axis_closure(solution):
    """Root of p', p'' there, and the x2-period making the axis smooth."""
    report = derivative_roots(solution)
    if report.degenerate:
        raise NotAxisClosableError("first derivative vanishes identically")
    if report.count != 1:
        raise NotAxisClosableError(f"expected one root of the derivative, found {report.count}")
    s0 = report.roots[0]
    d2 = float(solution.tower(np.array(s0), 2)[2])
    if not d2 > 0:
        raise ConeSingularError(f"second derivative at the axis is {d2!r}, not positive")
    return AxisClosure(root=s0, d2=d2, period=2.0 * np.pi / d2)


@dataclass(frozen=True)
class Oscillation:
    p_min: float
    p_max: float
    minima: tuple
    maxima: tuple
    periods: tuple

    @property
    def period(self):
        return float(np.mean(self.periods)) if self.periods else float("nan")

    @property
    def period_spread(self):
        return float(np.ptp(self.periods)) if self.periods else float("nan")

    @property
    def cycles(self):
        return len(self.periods)


def oscillation(solution):
    """Turning values and periods of a periodic profile."""
    roots = derivative_roots(solution).roots
    minima, maxima = [], []
    for r in roots:
        val, _, d2 = solution.tower(np.array(r), 2)
        (minima if d2 > 0 else maxima).append((r, float(val)))
    max_pos = [r for r, _ in maxima]
    periods = tuple(float(b - a) for a, b in zip(max_pos, max_pos[1:]))
    return Oscillation(
        p_min=float(np.mean([v for _, v in minima])) if minima else float("nan"),
        p_max=float(np.mean([v for _, v in maxima])) if maxima else float("nan"),
        minima=tuple(minima),
        maxima=tuple(maxima),
        periods=periods,
    )


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def closed_form_profile(problem, init):
    """Closed-form eta or tau profile through ``init`` = (value0, slope0).

    Both families are linear, y'' = c y, so the answer is a cosh/sinh/exp,
    sin/cos or linear function picked by the sign of c.  The result is a
    1-d profile with an exact derivative tower; wrap it in an
    :class:`~qe3d.fields.AxisField` to place it on a chart.
    """
    y0, y1 = float(init[0]), float(init[1])
    if isinstance(problem, EtaProfile):
        if not problem.lam < 0:
            raise DomainError("eta closed form is defined only for lambda < 0")
        c = -problem.lam / (problem.m + 2)
    elif isinstance(problem, TauProfile):
        c = -problem.k
    else:
        raise DomainError(f"no closed form for {type(problem).__name__}")
    fi = problem.first_integral([y0], [y1])
    if problem.level is not None and abs(fi - problem.level) > CONSISTENCY_TOL * max(1.0, abs(problem.level)):
        raise DomainError(f"initial data give level {fi!r}, declared {problem.level!r}")
    return OscillatorProfile(c, y0, y1)
