import numpy as np
import pytest

from qe3d.builders import (
    EinsteinMetric,
    LCFProfiles,
    build_einstein_block,
    build_lcf_space,
    build_space,
    canonical_eta_init,
    canonical_tau_init,
    case1_total_space_check,
    case2_total_space_check,
    doubly_warped_ricci,
    einstein_residual,
    lcf_system_residual,
    shoot_lcf,
    warped_ricci,
)
from qe3d.classifier import Case1, Case2, CaseI3, CaseII3
from qe3d.errors import CapabilityError, FiberMismatchError, InconsistentBuildError, InvalidProfileError
from qe3d.fields import AxisField, ConstantField, OscillatorProfile
from qe3d.geometry import CoordChart, DiagonalMetric, curvature_jets
from qe3d.presets import PRESETS, product_profiles
from conftest import round_s3_metric

CHART = ((-1.0, 1.0), (0.0, 2 * np.pi), (0.5, 2.5))
CASE1 = PRESETS["case1-example"].params
RHO_NEG = Case1(lam=-4.0, m=2, a=1.0, rho=-1.0, mu=2.0, p0=1.0)


def _sin(axis, dim):
    return AxisField(OscillatorProfile(-1.0, 0.0, 1.0), axis, dim)


# --- family builders ---------------------------------------------------------


def test_build_space_records_family_and_regime():
    sp = build_space(None, CASE1, chart=CHART)
    assert sp.label == "(i-1)"
    assert sp.regime == "not-eigen"
    assert sp.params["family"] == "case1"


def test_build_space_requires_chart():
    with pytest.raises(ValueError):
        build_space(None, CASE1)


def test_wrong_level_initial_data_rejected():
    # slope 5 at p = 1 is far off the level fixed by (lam, a, mu)
    with pytest.raises(InconsistentBuildError):
        build_space(None, CASE1, profiles={"p": (1.0, 5.0)}, chart=CHART)


def test_wrong_level_profile_rejected():
    with pytest.raises(InconsistentBuildError):
        build_space(None, CASE1, profiles={"eta": OscillatorProfile(1.0, 1.0, 0.0)}, chart=CHART)


def test_ii3_rejects_nonpositive_c1():
    with pytest.raises(InconsistentBuildError):
        build_space(None, CaseII3(-4.0, 2, 1.0, 1.0), profiles={"c1": 0.0}, chart=CHART)


@pytest.mark.parametrize("lam, rho", [(-4.0, 0.0), (-4.0, -1.0), (-4.0, 1.0), (0.0, 0.0)])
def test_canonical_eta_init_on_level(lam, rho):
    from qe3d.ode import EtaProfile, first_integral

    value, slope = canonical_eta_init(lam, 2, rho)
    assert value >= 0.0
    # the sinh branch starts at eta = 0, so read the level off at s = 0.5
    y, dy = OscillatorProfile(-lam / 4, value, slope).tower(0.5, 1)
    assert first_integral(EtaProfile(lam, 2, level=rho), y, dy) == pytest.approx(rho, abs=1e-12)


def test_canonical_tau_init_unreachable():
    with pytest.raises(InconsistentBuildError):
        canonical_tau_init(1.0, 2, -1.0)


# --- locally conformally flat family ------------------------------------------


def test_product_profiles_solve_the_system():
    s = np.linspace(-1.0, 1.0, 21)
    r1, r2 = lcf_system_residual(product_profiles(), s)
    assert max(r1.max(), r2.max()) < 1e-13


def test_lcf_two_paths_agree():
    # closed form h = 1, w = cos(s/sqrt2) against shooting from (1, 0, 1, 0)
    closed = product_profiles(1.0, 2, 1.0)
    shot, _ = shoot_lcf(1.0, 2, 1.0, (1.0, 0.0, 1.0, 0.0), span=(-1.1, 1.1))
    s = np.linspace(-1.0, 1.0, 41)
    for a, b in ((closed.h, shot.h), (closed.w, shot.w)):
        ta, tb = a.tower(s, 1), b.tower(s, 1)
        assert np.max(np.abs(ta[0] - tb[0])) < 1e-7
        assert np.max(np.abs(ta[1] - tb[1])) < 1e-7


def test_lcf_rejects_non_solution():
    bad = LCFProfiles(
        h=OscillatorProfile(0.0, 1.0, 0.0),
        w=OscillatorProfile(-1.0, 1.0, 0.0),  # needs -lam/m = -1/2
        k_section=1.0,
        lam=1.0,
        m=2,
    )
    with pytest.raises(InvalidProfileError):
        build_lcf_space(bad, ((-0.5, 0.5), (0.5, 2.5), (0.0, 1.0)))


def test_lcf_rejects_nonpositive_profile():
    closed = product_profiles(1.0, 2, 1.0)
    with pytest.raises(InvalidProfileError):
        # cos(s/sqrt2) vanishes at s = pi/sqrt2 ~ 2.22
        build_lcf_space(closed, ((0.0, 3.0), (0.5, 2.5), (0.0, 1.0)))


def test_lcf_flat_trivial_case():
    flat = LCFProfiles(OscillatorProfile(0.0, 0.0, 1.0), OscillatorProfile(0.0, 1.0, 0.0), 1.0, 0.0, 2)
    # h = s with k = 1 is R^3 in polar coordinates; w = 1 is a trivial potential
    s = np.linspace(0.1, 1.0, 11)
    r1, r2 = lcf_system_residual(flat, s)
    assert max(r1.max(), r2.max()) < 1e-12


# --- Einstein blocks ---------------------------------------------------------


@pytest.mark.parametrize(
    "params, dim, target",
    [
        (CASE1, 4, 0.0),
        (RHO_NEG, 4, -3.0),
        (CaseI3(2, 1.0, 2.0, 1.0), 4, 0.0),
        (PRESETS["ii1-schwarzschild"].params, 3, 2.0),
        (PRESETS["case2-k0"].params, 3, 0.0),
        (CaseII3(-4.0, 2, 1.0, 1.0), 3, 0.0),
    ],
)
def test_einstein_blocks(params, dim, target):
    block = build_einstein_block(None, params)
    assert block.dim == dim
    assert block.lambda_target == target
    rep = einstein_residual(block)
    assert rep.passed
    assert rep.max_residual < 1e-9


def test_perturbed_block_fails():
    block = build_einstein_block(None, RHO_NEG, profiles={"scale": 1.01})
    assert einstein_residual(block).max_residual > 1e-3


def test_round_sphere_is_einstein():
    rep = einstein_residual(EinsteinMetric(round_s3_metric(), 2.0))
    assert rep.max_residual < 1e-9


def test_negative_fiber_not_modeled():
    with pytest.raises(FiberMismatchError):
        build_einstein_block(None, PRESETS["i2-boundary"].params)


def test_block_capabilities():
    with pytest.raises(CapabilityError):
        build_einstein_block(None, Case1(-4.0, 3, 1.0, 0.0, 2.0, 1.0))
    chart = CoordChart(tuple((0.0, 1.0) for _ in range(5)))
    five = DiagonalMetric(chart, tuple(ConstantField(1.0, 5) for _ in range(5)))
    with pytest.raises(CapabilityError):
        einstein_residual(five)


# --- warped-product reductions ------------------------------------------------


def _ortho_ricci(metric, pts):
    cj = curvature_jets(metric, pts, order=2)
    gv = metric.values(pts) if not hasattr(cj, "g") else [g.value for g in cj.g]
    return [cj.ricci[(i, i)].value / gv[i] for i in range(metric.dim)]


def test_warped_formula_against_engine():
    # dt² + η² g_S2 with a non-special η, compared with the full curvature engine
    eta = OscillatorProfile(1.0, 1.0, 0.5)
    chart = CoordChart(((0.1, 0.9), (0.6, 2.4), (0.0, 1.0)))
    e = AxisField(eta, 0, 3)
    metric = DiagonalMetric(chart, (ConstantField(1.0, 3), e**2, e**2 * _sin(1, 3) ** 2))
    pts = chart.grid_points(4)
    ric = _ortho_ricci(metric, pts)
    t = np.asarray(pts).reshape(3, -1)[0]
    tt, fib = warped_ricci(eta.tower(t, 2), 1.0, 2)
    assert np.max(np.abs(np.ravel(ric[0]) - tt)) < 1e-10
    assert np.max(np.abs(np.ravel(ric[1]) - fib)) < 1e-10
    assert np.max(np.abs(np.ravel(ric[2]) - fib)) < 1e-10


def test_doubly_warped_formula_against_engine():
    a = OscillatorProfile(1.0, 1.0, 0.3)
    b = OscillatorProfile(-0.2, 1.0, 0.4)
    chart = CoordChart(((0.2, 0.8), (0.0, 1.0), (0.6, 2.4), (0.0, 1.0)))
    A, B = AxisField(a, 0, 4), AxisField(b, 0, 4)
    metric = DiagonalMetric(chart, (ConstantField(1.0, 4), A**2, B**2, B**2 * _sin(2, 4) ** 2))
    pts = chart.grid_points(3)
    ric = _ortho_ricci(metric, pts)
    r = np.asarray(pts).reshape(4, -1)[0]
    rr, th, fib = doubly_warped_ricci(a.tower(r, 2), b.tower(r, 2), 1.0, 2)
    for got, want in ((ric[0], rr), (ric[1], th), (ric[2], fib), (ric[3], fib)):
        assert np.max(np.abs(np.ravel(got) - want)) < 1e-10


def test_case1_total_space():
    for params in (CASE1, RHO_NEG):
        rep = case1_total_space_check(params, np.linspace(-1.0, 1.0, 21))
        assert rep.passed and rep.max_residual < 1e-10


@pytest.mark.parametrize("name", ["ii1-schwarzschild", "case2-k0"])
def test_case2_total_space(name):
    rep = case2_total_space_check(PRESETS[name].params, np.linspace(-0.5, 0.5, 11))
    assert rep.passed and rep.max_residual < 1e-10


def test_schwarzschild_landmark_is_ricci_flat():
    rep = case2_total_space_check(PRESETS["ii1-schwarzschild"].params, np.linspace(-1.0, 1.0, 41))
    assert rep.target == 0.0
    assert rep.max_residual < 1e-10


def test_case2_check_needs_off_axis_samples():
    with pytest.raises(ValueError):
        case2_total_space_check(PRESETS["ii1-schwarzschild"].params, np.array([0.0]))
