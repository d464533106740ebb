import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qe3d.errors import ConeSingularError, DomainError, NotAxisClosableError, SingularProfileError
from qe3d.ode import (
    EtaProfile,
    KobayashiP,
    LCFSystem,
    PotentialW,
    RadialP,
    TauProfile,
    axis_closure,
    closed_form_profile,
    derivative_roots,
    first_integral,
    integrate,
    oscillation,
)


# -- first integrals ---------------------------------------------------------


@pytest.mark.parametrize(
    "problem, value, slope, expected",
    [
        (EtaProfile(-4.0, 2), 1.0, 1.0, 0.0),
        (RadialP(-4.0, 1.0, 2), 1.0, 0.0, 0.0),
        (KobayashiP(0.0, 1.0, 2), 1.0, 0.0, 2.0),
        (TauProfile(0.0, 2), 5.0, 1.0, 1.0),
        (PotentialW(1.0, 2), 1.0, 0.0, 2.0),
    ],
)
def test_first_integral_values(problem, value, slope, expected):
    assert first_integral(problem, value, slope) == pytest.approx(expected, abs=1e-15)


def test_first_integral_domain():
    with pytest.raises(DomainError):
        first_integral(KobayashiP(0.0, 1.0, 2), 0.0, 1.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        KobayashiP(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        RadialP(0.0, 1.0, 2.5)


# -- integration against closed forms ----------------------------------------


def test_kobayashi_matches_implicit_solution():
    # (p')² = 2 - 2/p from p(0) = 1 integrates to
    # s(p) = (sqrt(p(p-1)) + arccosh(sqrt p)) / sqrt 2
    sol = integrate(KobayashiP(0.0, 1.0, 2), (1.0, 0.0), span=(-10, 10))
    p = np.array([1.1, 1.7, 3.0, 6.0, 9.0])
    s = (np.sqrt(p * (p - 1)) + np.arccosh(np.sqrt(p))) / np.sqrt(2)
    np.testing.assert_allclose(sol(s), p, rtol=1e-10)
    np.testing.assert_allclose(sol(-s), p, rtol=1e-10)
    assert sol.level == 2.0
    assert sol.max_drift < 1e-9
    assert sol.d2[sol.s.size // 2] == 1.0


def test_radial_k0_is_sqrt_cosh():
    sol = integrate(RadialP(-4.0, 1.0, 2, level=0.0), (1.0, 0.0), span=(-3, 3))
    s = np.linspace(-2.9, 2.9, 23)
    exact = np.sqrt(np.cosh(2 * s))
    np.testing.assert_allclose(sol(s), exact, rtol=1e-11)
    d1 = np.sinh(2 * s) / exact
    np.testing.assert_allclose(sol.tower(s, 1)[1], d1, rtol=1e-10, atol=1e-12)


def test_schwarzschild_profile():
    sol = integrate(RadialP(0.0, 1.0, 2, level=1.0), (1.0, 0.0), span=(-10, 10))
    s = np.linspace(-9.5, 9.5, 17)
    np.testing.assert_allclose(sol(s), np.sqrt(1 + s * s), rtol=1e-12)


@pytest.mark.parametrize(
    "problem, init",
    [
        (EtaProfile(-4.0, 2), (1.0, 1.0)),
        (EtaProfile(-4.0, 2), (1.0, 0.0)),
        (TauProfile(1.0, 2), (1.0, 0.1)),
        (TauProfile(-1.0, 2), (1.0, 0.2)),
    ],
)
def test_linear_families_match_closed_form(problem, init):
    sol = integrate(problem, init, span=(-1.5, 1.5), floor=1e-300)
    exact = closed_form_profile(problem, init)
    s = np.linspace(-1.4, 1.4, 15)
    for ours, ref in zip(sol.tower(s, 3), exact.tower(s, 3)):
        np.testing.assert_allclose(ours, ref, rtol=1e-10, atol=1e-12)


def test_closed_form_branches():
    eta = closed_form_profile(EtaProfile(-4.0, 2, level=0.0), (1.0, 1.0))
    s = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(eta(s), np.exp(s))
    cosh = closed_form_profile(EtaProfile(-4.0, 2, level=-1.0), (1.0, 0.0))
    np.testing.assert_allclose(cosh(s), np.cosh(s))
    tau = closed_form_profile(TauProfile(0.0, 2, level=1.0), (0.0, 1.0))
    np.testing.assert_allclose(tau(s), s)
    with pytest.raises(DomainError):
        closed_form_profile(EtaProfile(4.0, 2), (1.0, 0.0))
    with pytest.raises(DomainError):
        closed_form_profile(EtaProfile(-4.0, 2, level=1.0), (1.0, 0.0))
    with pytest.raises(DomainError):
        closed_form_profile(KobayashiP(0.0, 1.0, 2), (1.0, 0.0))


def test_lcf_product_solution():
    sol = integrate(LCFSystem(1.0, 2, 1.0), ((1.0, 1.0), (0.0, 0.0)), span=(-1.5, 1.5))
    s = np.linspace(-1.4, 1.4, 9)
    h = sol.component(0)
    w = sol.component(1)
    np.testing.assert_allclose(h(s), 1.0, atol=1e-14)
    np.testing.assert_allclose(w(s), np.cos(s / np.sqrt(2)), rtol=1e-11)
    assert sol.level == pytest.approx(0.5)


# -- validation and early exits ----------------------------------------------


def test_inconsistent_init_rejected():
    with pytest.raises(DomainError):
        integrate(KobayashiP(0.0, 1.0, 2, level=3.0), (1.0, 0.0))
    with pytest.raises(DomainError):
        integrate(KobayashiP(0.0, 1.0, 2), (-1.0, 0.0))
    with pytest.raises(ValueError):
        integrate(KobayashiP(0.0, 1.0, 2), (1.0, 0.0), step=0.2)
    with pytest.raises(ValueError):
        integrate(KobayashiP(0.0, 1.0, 2), (1.0, 0.0), span=(1.0, 2.0))


def test_singular_exit_carries_reason():
    with pytest.raises(SingularProfileError) as info:
        integrate(KobayashiP(0.0, 1.0, 2), (1e-7, 0.0))
    assert info.value.reason == "floor"


def test_blow_up_flags_early_exit():
    # a < 0 drives p to zero in finite time
    sol = integrate(PotentialW(-1.0, 2), (1.0, 0.0), span=(-10, 10))
    assert sol.early_exit
    assert sol.exits == {"lower": "floor", "upper": "floor"}
    assert sol.span[1] < 10


def test_solution_is_immutable():
    sol = integrate(KobayashiP(0.0, 1.0, 2), (1.0, 0.0), span=(-1, 1))
    with pytest.raises(ValueError):
        sol.values[0, 0] = 2.0
    with pytest.raises(ValueError):
        sol.d1[0] = 2.0


def test_dense_output_outside_span():
    sol = integrate(KobayashiP(0.0, 1.0, 2), (1.0, 0.0), span=(-1, 1))
    with pytest.raises(DomainError):
        sol(np.array([1.5]))


# -- roots, axis closure, oscillation ----------------------------------------


@pytest.mark.parametrize("rho, d2, period", [(0.0, 1.0, 2 * np.pi), (-1.0, 2.0, np.pi)])
def test_axis_closure(rho, d2, period):
    sol = integrate(KobayashiP(rho, 1.0, 2), (1.0, 0.0), span=(-10, 10))
    axis = axis_closure(sol)
    assert axis.root == 0.0
    assert axis.d2 == pytest.approx(d2, abs=1e-14)
    assert axis.period == pytest.approx(period, abs=1e-13)


def test_constant_solution_is_degenerate():
    sol = integrate(KobayashiP(1.0, 1.0, 2), (1.0, 0.0), span=(-10, 10))
    rep = derivative_roots(sol)
    assert rep.degenerate and rep.count == 0
    with pytest.raises(NotAxisClosableError):
        axis_closure(sol)


def test_cone_singular_at_a_maximum():
    sol = integrate(RadialP(4.0, 1.0, 2, level=3.0), (1.6180339887498949, 0.0), span=(-1, 1))
    with pytest.raises(ConeSingularError):
        axis_closure(sol)


def test_boundary_case_has_no_root():
    # mu = kappa0 = -3, p0 = 2 > rho0 = 1
    sol = integrate(KobayashiP(-1.0, -1.0, 2, level=-3.0), (2.0, np.sqrt(2.0)), span=(-10, 10))
    rep = derivative_roots(sol)
    assert rep.count == 0 and not rep.degenerate
    assert sol.positivity_floor > 1.0 - 1e-7
    assert not sol.early_exit


def test_potential_unique_root():
    sol = integrate(PotentialW(1.0, 2), (1.0, 0.0), span=(-10, 10))
    assert sol.level == 2.0
    assert derivative_roots(sol).roots == (0.0,)


def test_condition_v_oscillation():
    sol = integrate(RadialP(4.0, 1.0, 2, level=3.0), (1.0, 1.0), span=(-20, 20))
    osc = oscillation(sol)
    assert osc.p_min == pytest.approx((np.sqrt(5) - 1) / 2, abs=1e-10)
    assert osc.p_max == pytest.approx((np.sqrt(5) + 1) / 2, abs=1e-10)
    assert osc.cycles >= 5
    assert osc.period == pytest.approx(np.pi, abs=1e-9)
    assert osc.period_spread < 1e-6


# -- invariants ---------------------------------------------------------------


@pytest.mark.parametrize(
    "problem, p0",
    [
        (KobayashiP(0.0, 1.0, 2), 1.0),
        (KobayashiP(-1.0, 1.0, 2), 1.0),
        (RadialP(-4.0, 1.0, 2), 1.0),
        (RadialP(4.0, 1.0, 2), 0.8),
        (PotentialW(1.0, 3), 1.0),
        (TauProfile(2.0, 2), 1.0),
    ],
)
def test_even_symmetry(problem, p0):
    sol = integrate(problem, (p0, 0.0), span=(-1, 1))
    np.testing.assert_allclose(sol.value, sol.value[::-1], rtol=1e-9, atol=0)


@pytest.mark.parametrize("rho, a", [(1.0, 1.0), (2.0, 1.0), (-0.5, -1.0)])
def test_fixed_point_preserved(rho, a):
    m = 2
    p_star = (a / rho) ** (1.0 / (m + 1))
    sol = integrate(KobayashiP(rho, a, m), (p_star, 0.0), span=(0.0, 10.0))
    assert sol.s.size == 10001
    assert np.max(np.abs(sol.value - p_star)) <= 4 * np.finfo(float).eps * p_star


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.0, 0.0), st.floats(0.2, 2.0), st.floats(0.6, 2.0), st.integers(2, 4))
def test_lower_bound_under_iv1(rho, a, p0, m):
    prob = KobayashiP(rho, a, m)
    sol = integrate(prob, (p0, 0.0), span=(-3, 3))
    assert sol.positivity_floor > 0
    assert not sol.early_exit
    rel = np.max(sol.drift / np.maximum(1.0, sol.value**2 + sol.d1**2))
    assert rel < 1e-9
