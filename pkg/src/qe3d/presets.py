"""Named worked examples, each reproducible from one command."""

from dataclasses import dataclass, field

import numpy as np

from .builders import build_lcf_shooting, build_lcf_space, build_space, LCFProfiles
from .classifier import Case1, Case2, CaseI3, CaseII3
from .fields import OscillatorProfile

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str  # "family" or "lcf"
    params: object
    chart: tuple
    note: str = ""
    extra: dict = field(default_factory=dict)


PRESETS = {
    p.name: p
    for p in (
        Preset(
            "case1-example",
            "family",
            Case1(lam=-4.0, m=2, a=1.0, rho=0.0, mu=2.0, p0=1.0),
            ((-1.0, 1.0), (0.0, TWO_PI), (0.5, 2.5)),
            "eta = exp(x1); expects H = 2, lambda1 = -2",
        ),
        Preset(
            "case2-k0",
            "family",
            Case2(lam=-4.0, m=2, a=1.0, k=0.0, mu=1.0, p0=1.0),
            ((1.0, 3.0), (0.0, TWO_PI), (0.5, 2.5)),
            "tau = x1",
        ),
        Preset(
            "i3-example",
            "family",
            CaseI3(m=2, a=1.0, mu=2.0, w0=1.0),
            ((-1.0, 1.0), (0.0, TWO_PI), (0.5, 2.5)),
        ),
        Preset(
            "ii3-example",
            "family",
            CaseII3(lam=-4.0, m=2, a=1.0, p0=1.0),
            ((-1.0, 1.0), (0.0, TWO_PI), (0.5, 2.5)),
            "w = c1 p with c1 = 1, mu = 0",
        ),
        Preset(
            "caseV-incomplete",
            "family",
            Case2(lam=4.0, m=2, a=1.0, k=3.0, mu=1.0, p0=1.0),
            ((0.3, 1.5), (0.0, TWO_PI), (0.1, 0.9)),
            "periodic p between (sqrt5-1)/2 and (sqrt5+1)/2",
        ),
        Preset(
            "i2-boundary",
            "family",
            Case1(lam=-4.0, m=2, a=-1.0, rho=-1.0, mu=-3.0, p0=2.0),
            ((-1.0, 1.0), (0.0, TWO_PI), (-1.0, 1.0)),
            "mu = kappa0 = -3, eta = cosh(x1), p' has no root",
        ),
        Preset(
            "ii1-schwarzschild",
            "family",
            Case2(lam=0.0, m=2, a=1.0, k=1.0, mu=1.0, p0=1.0),
            ((0.3, 1.5), (0.0, TWO_PI), (0.5, 2.5)),
            "p = sqrt(1 + s^2); the total space is Ricci flat",
        ),
        Preset(
            "lcf-shooting",
            "lcf",
            None,
            ((0.1, 0.6), (0.5, 2.5), (0.0, 1.0)),
            "shooting from (h, h', w, w') = (1, 0.2, 1, 0.3)",
            {"lam": -4.0, "m": 2, "k": 1.0, "init": (1.0, 0.2, 1.0, 0.3)},
        ),
        Preset(
            "lcf-product",
            "lcf-closed",
            None,
            ((-1.0, 1.0), (0.5, 2.5), (0.0, 1.0)),
            "R x S^2 with h = 1, w = cos(s/sqrt2), mu = 1/2",
            {"lam": 1.0, "m": 2, "k": 1.0, "init": (1.0, 0.0, 1.0, 0.0)},
        ),
    )
}

# the five family spaces plus one LCF space used by the acceptance suite
VERIFY_PRESETS = ("case1-example", "case2-k0", "i3-example", "ii3-example", "lcf-shooting")


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def product_profiles(lam=1.0, m=2, k=1.0):
    """Closed-form (h, w) for R x S^2: h = 1, w = cos(s sqrt(lam/m))."""
    return LCFProfiles(
        h=OscillatorProfile(0.0, 1.0, 0.0),
        w=OscillatorProfile(-lam / m, 1.0, 0.0),
        k_section=k,
        lam=lam,
        m=m,
    )


def preset_space(name, step=1e-3):
    """Build the QE space of a preset."""
    pre = get_preset(name)
    if pre.kind == "family":
        return build_space(None, pre.params, chart=pre.chart, step=step)
    ex = pre.extra
    if pre.kind == "lcf":
        return build_lcf_shooting(ex["lam"], ex["m"], ex["k"], ex["init"], pre.chart, step=step, label=name)
    prof = product_profiles(ex["lam"], ex["m"], ex["k"])
    return build_lcf_space(prof, pre.chart, label=name, mu_expected=0.5)
