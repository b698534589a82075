import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from gaugedqball import thinwall as tw
from gaugedqball.model import DomainError


def step_charge(q, r_ball, f_tilde, e):
    # quadrature of 4 pi int r^2 g f^2 over the step profile
    g = lambda r: float(tw.g_profile(r, q, r_ball, f_tilde, e))
    val = integrate.quad(lambda r: r * r * g(r), 0.0, r_ball, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return 4.0 * math.pi * f_tilde**2 * val


def test_g_profile_limits():
    q, R, f, e = 300.0, 4.0, 2.0, 0.1
    w = tw.omega_of(q, R, f, e)
    wall = w - e * e * q / (4 * math.pi * R)
    assert tw.g_profile(R, q, R, f, e) == pytest.approx(wall, rel=1e-15)
    inside, outside = tw.g_profile(np.array([R * (1 - 1e-12), R * (1 + 1e-12)]), q, R, f, e)
    assert inside == pytest.approx(outside, rel=1e-10)
    x = e * f * R
    assert tw.g_profile(0.0, q, R, f, e) == pytest.approx(wall * x / math.sinh(x), rel=1e-13)
    h = 1e-6
    assert abs(tw.g_profile(h, q, R, f, e) - tw.g_profile(0.0, q, R, f, e)) < 1e-10
    assert tw.g_profile(1e9, q, R, f, e) == pytest.approx(w, rel=1e-8)


def test_omega_of_examples():
    assert tw.omega_of(100.0, 5.0, 2.0, 0.001) == pytest.approx(0.047746, abs=5e-6)
    assert tw.omega_of(100.0, 5.0, 2.0, 0.0) == pytest.approx(3 * 100 / (4 * math.pi * 4 * 125), rel=1e-15)
    q, R, e = 50.0, 10.0, 20.0
    assert tw.omega_of(q, R, 2.0, e) == pytest.approx(e * e * q / (4 * math.pi * R), rel=1e-2)


@settings(max_examples=30, deadline=None)
@given(st.floats(10.0, 1e4), st.floats(0.5, 20.0), st.floats(1.1, 3.0), st.floats(1e-4, 0.5))
def test_charge_closure(q, R, f, e):
    assert step_charge(q, R, f, e) == pytest.approx(q, rel=1e-8)


def test_small_x_series_matches_direct_form():
    for x in (1e-3, 5e-3, 9e-3, 2e-2, 0.1):
        direct = 1.0 - math.tanh(x) / x
        series = x * x / 3 - 2 * x**4 / 15 + 17 * x**6 / 315
        assert tw.one_minus_tanhc(x) == pytest.approx(series if x < 1e-2 else direct, rel=1e-11)


def test_energy_examples():
    q, R, f, e, eps = 100.0, 5.0, 2.0, 0.001, 1.5
    E = tw.energy(q, R, f, e, eps)
    assert E == pytest.approx(2.38732 + 261.799, rel=1e-5)
    coulomb = E - 4 * math.pi / 3 * 0.5 * R**3
    assert coulomb == pytest.approx(0.5 * tw.omega_of(q, R, f, e) * q, rel=1e-12)


def test_ungauged_minimum():
    q, eps = 1000.0, 1.5
    res = optimize.minimize(lambda v: tw.energy(q, v[0], v[1], 0.0, eps), x0=[5.0, 1.8], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    assert res.fun == pytest.approx(q * math.sqrt(1 - eps / 2), rel=1e-8)
    assert res.x[1] == pytest.approx(2.0, abs=1e-4)


@pytest.mark.parametrize("e", [1e-3, 0.01, 0.1, 0.5])
@pytest.mark.parametrize("f", [1.7, 2.0, 2.4])
def test_stationary_radius(e, f):
    q, eps = 1000.0, 1.5
    R = tw.stationary_radius(q, f, e, eps)
    h = 1e-5 * R
    dE = (tw.energy(q, R + h, f, e, eps) - tw.energy(q, R - h, f, e, eps)) / (2 * h)
    E = tw.energy(q, R, f, e, eps)
    assert abs(dE) <= 1e-6 * E / R
    assert tw.energy_dr(q, R, f, e, eps) == pytest.approx(0.0, abs=1e-9 * E / R)
    # the quoted radius condition is the same root
    assert tw.stationary_radius_printed(q, f, e, eps) == pytest.approx(R, rel=1e-11)
    assert abs(tw.printed_radius_residual(R, q, f, e, eps)) <= 1e-10 * e * e * q


def test_stationary_radius_small_coupling_limit():
    q, eps = 1000.0, 1.5
    lead = (3 * q / (8 * math.pi * math.sqrt(2 * (2 - eps)))) ** (1 / 3)
    assert lead == pytest.approx(4.924, abs=1e-3)
    assert tw.stationary_radius(q, 2.0, 1e-5, eps) == pytest.approx(lead, rel=1e-8)


def test_small_coupling_examples():
    s = tw.small_coupling_solution(1000.0, 0.0, 1.5)
    assert s.f_tilde == 2.0 and s.e_star == pytest.approx(500.0, rel=1e-15)
    assert s.r_star == pytest.approx(4.924, abs=1e-3)
    g = tw.small_coupling_solution(1000.0, 0.01, 1.5)
    assert g.r_star > s.r_star and g.e_star > s.e_star
    assert g.e_star / 1000.0 > math.sqrt(1 - 1.5 / 2)
    assert 0 < g.omega < 1 and g.valid


def test_validity_flag():
    assert not tw.small_coupling_solution(500.0, 0.1, 1.5).valid
    assert tw.small_coupling_solution(500.0, 0.1, 1.5, threshold=1.0).valid


@pytest.mark.parametrize("e", [1e-3, 1e-2, 3e-2])
def test_small_coupling_matches_exact_minimum(e):
    # the closed forms are a first-order expansion of the step-ansatz minimum
    q, eps = 1000.0, 1.5
    s = tw.small_coupling_solution(q, e, eps)
    x = tw.exact_solution(q, e, eps)
    assert s.e_star == pytest.approx(x.e_star, rel=5 * s.validity**4 + 1e-9)
    assert s.r_star == pytest.approx(x.r_star, rel=5 * s.validity**2 + 1e-6)
    # agreement to second order in the shift away from 2
    assert s.f_tilde == pytest.approx(x.f_tilde, abs=(2.0 - x.f_tilde) ** 2 + 1e-8)


def test_f_tilde_first_order_form():
    q, e, eps = 1000.0, 0.01, 1.5
    analytic = 2 - 16 * e * e / (15 * eps) * (9 * q * q * (1 - eps / 2) ** 2 / (32 * math.pi**2)) ** (1 / 3)
    shift = 2 - tw.small_coupling_f_tilde(q, e, eps)
    assert shift == pytest.approx(2 - analytic, rel=5e-3)
    printed = tw.small_coupling_f_tilde_printed(q, e, eps)
    assert (2 - printed) / (2 - analytic) == pytest.approx(2.32, abs=0.01)


def test_energy_expansion_consistency():
    # corrected first-order energy against the full step energy at the stationary radius
    q, eps = 1000.0, 1.5
    for e in (1e-3, 3e-3):
        R = tw.stationary_radius(q, 2.0, e, eps)
        full = tw.energy(q, R, 2.0, e, eps)
        x = 2 * e * R
        assert tw.small_coupling_energy(q, 2.0, e, eps) == pytest.approx(full, rel=x**4)


def test_q_max_examples():
    assert tw.q_max_printed(0.1, 1.5) == pytest.approx(1170.8, abs=0.05)
    assert tw.q_max_printed(0.2, 1.5) / tw.q_max_printed(0.1, 1.5) == pytest.approx(0.25, rel=1e-14)
    assert tw.q_max(0.2, 1.5) / tw.q_max(0.1, 1.5) == pytest.approx(0.125, rel=1e-14)
    assert tw.q_max(0.0, 1.5) == math.inf


@pytest.mark.parametrize("eps", [1.2, 1.5, 1.9])
@pytest.mark.parametrize("e", [0.01, 0.1])
def test_q_max_is_unit_slope(eps, e):
    qm = tw.q_max(e, eps)
    h = 1e-4 * qm
    slope = (tw.small_coupling_e_star(qm + h, e, eps) - tw.small_coupling_e_star(qm - h, e, eps)) / (2 * h)
    assert slope == pytest.approx(1.0, abs=1e-8)
    hp = 1e-4 * tw.q_max_printed(e, eps)
    qp = tw.q_max_printed(e, eps)
    slope_p = (tw.small_coupling_e_star(qp + hp, e, eps) - tw.small_coupling_e_star(qp - hp, e, eps)) / (2 * hp)
    assert abs(slope_p - 1.0) > 1e-3


def test_energy_monotone_convex_single_crossing():
    e, eps = 0.1, 1.5
    qs = np.linspace(10.0, 3 * tw.q_max(e, eps), 400)
    E = np.array([tw.small_coupling_e_star(q, e, eps) for q in qs])
    dE = np.gradient(E, qs)
    assert np.all(np.diff(E) > 0)
    assert np.all(np.diff(dE[1:-1]) > 0)
    crossings = np.nonzero(np.diff(np.sign(dE - 1.0)))[0]
    assert crossings.size == 1
    assert qs[crossings[0]] <= tw.q_max(e, eps) <= qs[crossings[0] + 1]


def test_small_coupling_continuous_at_zero():
    q, eps = 500.0, 1.5
    ref = tw.small_coupling_solution(q, 0.0, eps)
    prev = None
    for e in (1e-3, 1e-4, 1e-5):
        s = tw.small_coupling_solution(q, e, eps)
        d = abs(s.e_star - ref.e_star) + abs(s.r_star - ref.r_star) + abs(s.f_tilde - ref.f_tilde)
        if prev is not None:
            assert d < prev
        prev = d
    assert prev < 1e-6


def test_degenerate_examples():
    s = tw.degenerate_solution(1.0, 1.0)
    assert s.r_star == pytest.approx((1 / (128 * math.pi**2)) ** (1 / 3), rel=1e-15)
    assert s.r_star == pytest.approx(0.0925, abs=1e-4)
    assert tw.degenerate_q_max(1.0) == math.pi / 2
    R = s.r_star
    h = 1e-6 * R
    fd = (tw.degenerate_energy(1.0, R + h, 1.0) - tw.degenerate_energy(1.0, R - h, 1.0)) / (2 * h)
    assert abs(fd) <= 1e-8 * s.e_star / R


@pytest.mark.parametrize("q,e", [(1.0, 1.0), (40.0, 0.3), (1e4, 0.05)])
def test_degenerate_matches_direct_minimization(q, e):
    res = optimize.minimize_scalar(lambda r: tw.degenerate_energy(q, r, e), bounds=(1e-4, 1e3), method="bounded",
                                  options={"xatol": 1e-13})
    s = tw.degenerate_solution(q, e)
    assert s.r_star == pytest.approx(res.x, rel=1e-7)
    assert s.e_star == pytest.approx(res.fun, rel=1e-12)
    h = 1e-5 * q
    slope = (tw.degenerate_solution(q + h, e).e_star - tw.degenerate_solution(q - h, e).e_star) / (2 * h)
    assert slope == pytest.approx(s.omega, rel=1e-8)


def test_domain_errors():
    with pytest.raises(DomainError):
        tw.small_coupling_solution(100.0, 0.1, 2.0)
    with pytest.raises(DomainError):
        tw.q_max(0.1, 2.0)
    with pytest.raises(DomainError):
        tw.omega_of(-1.0, 1.0, 2.0, 0.1)
    with pytest.raises(DomainError):
        tw.g_profile(-1.0, 10.0, 1.0, 2.0, 0.1)
