"""Case taxonomy, threshold constants and completeness evidence.

Families
--------
``Case1``   g = dx1² + η²p'²dx2² + η²dx3², w = pη
``Case2``   g = p²dx1² + p'²dx2² + dx3², w = τp
``CaseI3``  g = dx1² + w'²dx2² + dx3², λ = 0
``CaseII3`` g = p²dx1² + p'²dx2² + dx3², w = c1 p, μ = 0

Labels are decided with exact comparisons on the values the caller supplies;
boundary cases are analytic splits, not measurements.
"""

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DomainError, WitnessFailure
from .ode import (
    KobayashiP,
    PotentialW,
    RadialP,
    axis_closure,
    derivative_roots,
    integrate,
    oscillation,
)

COMPLETE_LABELS = ("(i-1)", "(i-2)", "(i-3)", "(ii-1)", "(ii-2)", "(ii-3)")
ALL_LABELS = COMPLETE_LABELS + ("incomplete", "outside")

# rounding slack when the slope at p0 is analytically zero
SLOPE_SLACK = 1e-12
WITNESS_CEILING = 1e150

EXPONENT_WARNING = (
    "case-2 thresholds use exponents 1/(m+2) and 2/(m+2) from the ODE "
    "derivation; the summary statement of this case prints 1/(m+1) and "
    "2/(m+1)"
)


# ---------------------------------------------------------------------------
# parameter families
# ---------------------------------------------------------------------------


def _check_common(m, positive):
    if int(m) != m or m < 2:
        raise ValueError("m must be an integer >= 2")
    if not positive > 0:
        raise ValueError("initial profile value must be positive")


@dataclass(frozen=True)
class Case1:
    lam: float
    m: int
    a: float
    rho: float
    mu: float
    p0: float
    slope_sign: int = 1
    family = "case1"

    def __post_init__(self):
        _check_common(self.m, self.p0)

    def level(self):
        return self.mu / (self.m - 1)

    def slope_sq(self):
        m = self.m
        return self.level() - self.rho * self.p0**2 - 2 * self.a / (m - 1) * self.p0 ** (1 - m)

    def problem(self):
        return KobayashiP(self.rho, self.a, self.m, level=self.level())


@dataclass(frozen=True)
class Case2:
    lam: float
    m: int
    a: float
    k: float
    mu: float
    p0: float
    slope_sign: int = 1
    family = "case2"

    def __post_init__(self):
        _check_common(self.m, self.p0)

    def level(self):
        return self.k

    def slope_sq(self):
        m = self.m
        return self.k - self.lam / (m + 2) * self.p0**2 - 2 * self.a / m * self.p0 ** (-m)

    def problem(self):
        return RadialP(self.lam, self.a, self.m, level=self.k)


@dataclass(frozen=True)
class CaseI3:
    m: int
    a: float
    mu: float
    w0: float
    slope_sign: int = 1
    family = "i3"
    lam = 0.0

    def __post_init__(self):
        _check_common(self.m, self.w0)

    @property
    def p0(self):
        return self.w0

    def level(self):
        return self.mu / (self.m - 1)

    def slope_sq(self):
        m = self.m
        return self.level() - 2 * self.a / (m - 1) * self.w0 ** (1 - m)

    def problem(self):
        return PotentialW(self.a, self.m, level=self.level())


@dataclass(frozen=True)
class CaseII3:
    lam: float
    m: int
    a: float
    p0: float
    slope_sign: int = 1
    family = "ii3"
    mu = 0.0

    def __post_init__(self):
        _check_common(self.m, self.p0)

    def level(self):
        return 0.0

    def slope_sq(self):
        m = self.m
        return -self.lam / (m + 2) * self.p0**2 - 2 * self.a / m * self.p0 ** (-m)

    def problem(self):
        return RadialP(self.lam, self.a, self.m, level=0.0)


FAMILIES = {cls.family: cls for cls in (Case1, Case2, CaseI3, CaseII3)}


def initial_slope(params):
    """Signed p'(0) from the first integral; None when the level is unreachable."""
    sq = params.slope_sq()
    if sq < -SLOPE_SLACK * max(1.0, abs(params.level())):
        return None
    return float(np.copysign(np.sqrt(max(sq, 0.0)), params.slope_sign))


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    rho0: float = None
    kappa0: float = None
    defined: bool = False
    exponent: str = None


def _same_sign(x, y):
    # compare signs, not the product, which can underflow to zero
    return x != 0 and y != 0 and (x > 0) == (y > 0)


def thresholds(params):
    """(rho0, kappa0) where the sign precondition holds, else an undefined record."""
    m = params.m
    if isinstance(params, Case1):
        if not _same_sign(params.a, params.rho):
            return Thresholds()
        rho0 = (params.a / params.rho) ** (1.0 / (m + 1))
        return Thresholds(rho0, (m + 1) * params.rho * rho0**2, True, "1/(m+1)")
    if isinstance(params, Case2):
        if not _same_sign(params.a, params.lam):
            return Thresholds()
        rho0 = (params.a * (m + 2) / params.lam) ** (1.0 / (m + 2))
        return Thresholds(rho0, params.lam / m * rho0**2, True, "1/(m+2)")
    return Thresholds()


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationResult:
    family: str
    label: str
    thresholds: Thresholds
    topology: str = None
    subcase: str = None
    reason: str = ""
    warnings: tuple = ()
    params: dict = field(default_factory=dict)

    @property
    def complete(self):
        return self.label in COMPLETE_LABELS

    def to_dict(self):
        return {
            "family": self.family,
            "label": self.label,
            "complete": self.complete,
            "params": dict(sorted(self.params.items())),
            "thresholds": {
                "defined": self.thresholds.defined,
                "rho0": self.thresholds.rho0,
                "kappa0": self.thresholds.kappa0,
                "exponent": self.thresholds.exponent,
            },
            "topology": self.topology,
            "subcase": self.subcase,
            "reason": self.reason,
            "warnings": list(self.warnings),
        }


def _result(params, label, th=None, **kw):
    data = {k: v for k, v in asdict(params).items()}
    return ClassificationResult(
        family=params.family, label=label, thresholds=th or Thresholds(), params=data, **kw
    )


def _case2_topology(k, mu, m):
    if k > 0:
        return f"S^{m + 1}xR2"
    if k == 0:
        return f"R^{m + 3}"
    return f"R^{m + 3}" if mu > 0 else "R3xF"


def classify(params):
    """Label a parameter tuple; pure and total."""
    a, m = params.a, params.m
    if a == 0:
        return _result(params, "outside", reason="a = 0 gives an Einstein metric, not this classification")
    if initial_slope(params) is None:
        return _result(params, "outside", reason="first-integral level is unreachable from the initial value")

    if isinstance(params, CaseI3):
        if a > 0:
            return _result(params, "(i-3)", topology="R3xF", reason="lambda = 0, a > 0; mu > 0 follows")
        return _result(params, "incomplete", reason="potential family with a < 0")

    if isinstance(params, CaseII3):
        if a > 0 and params.lam < 0:
            return _result(params, "(ii-3)", topology="R3xF", reason="a > 0, lambda < 0, mu = 0")
        return _result(params, "incomplete", reason="complete exactly when a > 0 and lambda < 0")

    lam = params.lam
    th = thresholds(params)

    if isinstance(params, Case1):
        rho, mu = params.rho, params.mu
        if lam == 0 and rho == 0:
            # eta is constant and the space is the potential family
            if a > 0:
                return _result(params, "(i-3)", th, topology="R3xF", reason="lambda = rho = 0, a > 0")
            return _result(params, "incomplete", th, reason="lambda = rho = 0 with a < 0")
        if lam >= 0 or rho > 0:
            return _result(params, "incomplete", th, reason="lambda >= 0, or rho > 0 with lambda < 0")
        if a > 0 and rho <= 0:
            return _result(params, "(i-1)", th, topology="R3xF", subcase="unique-root",
                           reason="lambda < 0, a > 0, rho <= 0")
        if a < 0 and rho < 0 and mu <= th.kappa0 and params.p0 > th.rho0:
            sub = "no-root" if mu == th.kappa0 else "unique-root"
            return _result(params, "(i-2)", th, topology="R3xF", subcase=sub,
                           reason="lambda < 0, a < 0, rho < 0, mu <= kappa0, p0 > rho0")
        return _result(params, "outside", th, reason="no listed completeness condition applies")

    # Case2
    k, mu = params.k, params.mu
    if mu < 0 and k >= 0 or mu == 0 and k > 0:
        return _result(params, "outside", th, reason="no positive tau solves the tau first integral")
    if mu == 0 and k == 0:
        # tau is constant: this is the w = c1 p family
        if a > 0 and lam < 0:
            return _result(params, "(ii-3)", th, topology="R3xF", reason="k = mu = 0 reduces to w = c1 p")
        return _result(params, "incomplete", th, reason="k = mu = 0 with a <= 0 or lambda >= 0")
    if a > 0 and lam <= 0:
        return _result(params, "(ii-1)", th, topology=_case2_topology(k, mu, m), subcase="unique-root",
                       reason="a > 0, lambda <= 0")
    if a < 0 and lam < 0 and params.p0 > th.rho0 and k <= th.kappa0:
        sub = "no-root" if k == th.kappa0 else "unique-root"
        return _result(params, "(ii-2)", th, topology=_case2_topology(k, mu, m), subcase=sub,
                       reason="a < 0, lambda < 0, p0 > rho0, k <= kappa0",
                       warnings=(EXPONENT_WARNING,))
    if a > 0 and lam > 0 and k > th.kappa0:
        return _result(params, "incomplete", th, subcase="condition-V",
                       reason="a > 0, lambda > 0, k > kappa0: periodic p cannot close smoothly")
    return _result(params, "outside", th, reason="no listed completeness condition applies")


# ---------------------------------------------------------------------------
# numerical witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessRecord:
    label: str
    roots: tuple
    positivity_floor: float
    drift_rate: float
    relative_drift_rate: float
    min_abs_d1: float
    axis_d2: float = None
    axis_period: float = None
    span: tuple = None

    def to_dict(self):
        return asdict(self)


def _relative_drift_rate(sol):
    scale = np.maximum(1.0, np.maximum(sol.value**2, sol.d1**2))
    return float(np.max(sol.drift / scale) / sol.length)


ROOT_LEMMAS = {
    "unique-root": "p' has a unique root (complete, polar axis)",
    "no-root": "p' has no root (boundary case, complete)",
}


def completeness_witness(params, step=1e-3, span=(-10.0, 10.0), drift_tol=1e-7):
    """Integrate the profile over ``span`` and check what completeness requires."""
    result = classify(params)
    if not result.complete:
        raise ValueError(f"no completeness witness for label {result.label!r}")
    if span[1] - span[0] < 20:
        raise ValueError("witness span must have length >= 20")
    slope = initial_slope(params)
    # exponential growth is allowed here, so only a true blow-up should stop the march
    sol = integrate(params.problem(), (params.p0, slope), step=step, span=span, ceiling=WITNESS_CEILING)
    sub = result.subcase or "unique-root"
    lemma = ROOT_LEMMAS[sub]
    if sol.early_exit:
        raise WitnessFailure(f"profile left the admissible band: {sol.exits}", "profile defined on R")
    if not sol.positivity_floor > 0:
        raise WitnessFailure("profile is not positive", "profile defined on R")
    rel = _relative_drift_rate(sol)
    if rel > drift_tol:
        raise WitnessFailure(f"first-integral drift {rel:.3e} per unit length", "conserved first integral")
    roots = derivative_roots(sol)
    want = 0 if sub == "no-root" else 1
    if roots.degenerate or roots.count != want:
        raise WitnessFailure(f"found {roots.count} roots of p', expected {want}", lemma)
    axis = None
    if want == 1:
        axis = axis_closure(sol)
    return WitnessRecord(
        label=result.label,
        roots=roots.roots,
        positivity_floor=sol.positivity_floor,
        drift_rate=sol.drift_rate,
        relative_drift_rate=rel,
        min_abs_d1=roots.min_abs_d1,
        axis_d2=None if axis is None else axis.d2,
        axis_period=None if axis is None else axis.period,
        span=sol.span,
    )


# ---------------------------------------------------------------------------
# incompleteness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertificateRecord:
    m: int
    p1: object
    p2: object
    lhs: object
    rhs: object
    relative_error: float
    exact: bool
    identity_holds: bool
    positive: bool

    def to_dict(self):
        out = asdict(self)
        for key in ("p1", "p2", "lhs", "rhs"):
            out[key] = float(out[key])
        return out


def _is_rational(x):
    return isinstance(x, Rational) and not isinstance(x, bool)


def certificate_sides(m, p1, p2):
    """Both sides of the smooth-closure obstruction identity."""
    lhs = m * (p1 ** (m + 1) + p2 ** (m + 1)) - 2 * sum(p1 ** (m + 1 - j) * p2**j for j in range(1, m + 1))
    rhs = (p1 - p2) ** 2 * sum(k * (m - k + 1) * p1 ** (k - 1) * p2 ** (m - k) for k in range(1, m + 1))
    return lhs, rhs


def incompleteness_certificate(m, p1, p2, exact=None, rel_tol=1e-10):
    """Evaluate LHS and RHS; rational inputs are compared exactly.

    The relative error is measured against m(p1^(m+1) + p2^(m+1)), the size
    of the terms that cancel when p1 is close to p2.
    """
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    m = int(m)
    if not (p1 > 0 and p2 > 0):
        raise DomainError("turning values must be positive")
    if exact is None:
        exact = _is_rational(p1) and _is_rational(p2)
    if exact:
        p1, p2 = Fraction(p1), Fraction(p2)
    else:
        p1, p2 = float(p1), float(p2)
    lhs, rhs = certificate_sides(m, p1, p2)
    scale = m * (p1 ** (m + 1) + p2 ** (m + 1))
    rel = float(abs(lhs - rhs) / scale)
    holds = lhs == rhs if exact else rel < rel_tol
    if exact:
        positive = lhs > 0 if p1 != p2 else lhs == 0
    else:
        # near p1 = p2 the float LHS cancels to rounding level
        positive = lhs > 0 or abs(lhs) / scale < rel_tol
    return CertificateRecord(
        m=m, p1=p1, p2=p2, lhs=lhs, rhs=rhs, relative_error=rel,
        exact=bool(exact), identity_holds=bool(holds), positive=bool(positive),
    )


@dataclass(frozen=True)
class IncompletenessRecord:
    label: str
    p_min: float
    p_max: float
    period: float
    period_spread: float
    cycles: int
    certificate: CertificateRecord
    closure_mismatch: float

    def to_dict(self):
        out = asdict(self)
        out["certificate"] = self.certificate.to_dict()
        return out


def incompleteness_witness(params, step=1e-3, span=(-20.0, 20.0)):
    """Detect the periodic orbit under condition V and certify the obstruction.

    ``closure_mismatch`` is |p''(s1) + p''(s2)|, which smooth closure at both
    turning values would force to vanish.
    """
    result = classify(params)
    if result.subcase != "condition-V":
        raise ValueError("incompleteness witness applies to condition V only")
    sol = integrate(params.problem(), (params.p0, initial_slope(params)), step=step, span=span)
    osc = oscillation(sol)
    if osc.cycles < 5:
        raise WitnessFailure(f"only {osc.cycles} full cycles detected", "periodic profile")
    cert = incompleteness_certificate(params.m, osc.p_min, osc.p_max)
    d2 = params.problem().rhs
    mismatch = abs(d2([osc.p_min], [0.0])[0] + d2([osc.p_max], [0.0])[0])
    return IncompletenessRecord(
        label=result.label,
        p_min=osc.p_min,
        p_max=osc.p_max,
        period=osc.period,
        period_spread=osc.period_spread,
        cycles=osc.cycles,
        certificate=cert,
        closure_mismatch=float(mismatch),
    )
