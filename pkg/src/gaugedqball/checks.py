"""Fast invariant suite behind ``gaugedqball check``.

Every check is deterministic and takes well under a few seconds; the whole
suite is meant to pass on a fresh install.  Results are plain records so the
command-line front end can serialize them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from scipy import integrate

from . import numeric, picard, specfun, thinwall
from .model import ModelParams, NoBoundStateError, omega_min, potential


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    passed: bool
    value: float
    tolerance: float


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _model_checks():
    eps = 1.5
    out = [("potential_u_at_2", abs(potential(2.0, eps).u - (2.0 - eps)), 1e-15)]
    f = np.linspace(0.01, 4.0, 400)
    ratio = min(2.0 * potential(x, eps).u / x**2 for x in f)
    out.append(("omega_min_is_min_ratio", abs(math.sqrt(ratio) - omega_min(eps)), 1e-4))
    return out


def _specfun_checks():
    out = []
    for x in (0.3, 2.0, 35.0, 60.0):
        oracle = integrate.quad(lambda t: math.sinh(t) / t if t else 1.0, 0.0, x, epsabs=0.0, epsrel=1e-13)[0]
        out.append((f"shi_quadrature_x={x:g}", _rel(specfun.shi(x).value, oracle), 1e-10))
    for x in (0.5, 3.0, 30.0):
        out.append((f"ei_representation_x={x:g}",
                    _rel(specfun.ei(-x).value, specfun.ei_integral_representation(x)), 1e-8))
    nu, r = 0.6, 2.0
    tail = integrate.quad(lambda t: specfun.ei(-2 * nu * t).value, r, np.inf, epsabs=0.0, epsrel=1e-12)[0]
    out.append(("ei_tail_quadrature", _rel(specfun.ei_tail(r, nu).value, tail), 1e-10))
    return out


def _thinwall_checks():
    out = []
    q, e, eps = 1000.0, 0.01, 1.5
    r_root = thinwall.stationary_radius(q, 2.0, e, eps)
    h = 1e-5 * r_root
    fd = (thinwall.energy(q, r_root + h, 2.0, e, eps) - thinwall.energy(q, r_root - h, 2.0, e, eps)) / (2 * h)
    out.append(("stationary_radius_is_energy_extremum", abs(fd) / thinwall.energy(q, r_root, 2.0, e, eps), 1e-8))
    qm = thinwall.q_max(0.1, eps)
    dq = 1e-4 * qm
    slope = (thinwall.small_coupling_e_star(qm + dq, 0.1, eps) - thinwall.small_coupling_e_star(qm - dq, 0.1, eps)) / (2 * dq)
    out.append(("small_coupling_slope_one_at_q_max", abs(slope - 1.0), 1e-8))
    out.append(("degenerate_q_max_e1", abs(thinwall.degenerate_q_max(1.0) - math.pi / 2), 0.0))
    return out


def _picard_checks():
    out = []
    omega, eps, e = 0.8, 1.5, 0.05
    sol = picard.picard_solution(omega, eps, e)
    R = sol.profile.r_match
    r = np.linspace(0.1 * R, 5 * R, 25)
    step = picard.picard_step(lambda t: picard.v1(t, sol), lambda t: picard.profile_f(t, sol.profile), e,
                              np.inf, 0.0, breakpoints=(R,))
    out.append(("v2_closed_matches_quadrature", float(np.max(np.abs(step(r) - picard.v2_closed(r, sol)))), 1e-8))
    wp = sol.profile
    jump = abs(picard.profile_df(R * (1 - 1e-13), wp) - picard.profile_df(R * (1 + 1e-13), wp))
    out.append(("match_radius_c1", jump, 1e-10))
    return out


def _numeric_checks():
    out = []
    p = numeric.solve_selfconsistent(ModelParams(0.01, 1.5, omega=0.8))
    rf, rg = numeric.max_residuals(p)
    out.append(("residual_scalar", rf, 1e-7))
    out.append(("residual_gauge", rg, 1e-7))
    out.append(("energy_forms_agree", numeric.energy(p).rel_gap, 1e-6))
    out.append(("gauss_surface_identity", abs(numeric.gauss_surface_ratio(p) - 1.0), 1e-2))
    _, decay = numeric.asymptotic_fit(p)
    out.append(("tail_decay", abs(decay / math.sqrt(1 - 0.8**2) - 1.0), 1e-2))
    out.append(("derrick_identity", abs(numeric.scaling_defect(p)), 1e-4))
    wp = picard.weak_coupling_profile(0.8, 1.5)
    p0 = numeric.solve_selfconsistent(ModelParams(0.0, 1.5, omega=0.8))
    out.append(("ungauged_closed_form", float(np.max(np.abs(p0.f - picard.profile_f(p0.r, wp)))), 1e-6))
    try:
        numeric.solve_selfconsistent(ModelParams(0.0, 1.5, omega=1.0))
        flagged = 0.0
    except NoBoundStateError:
        flagged = 1.0
    out.append(("omega_one_has_no_bound_state", 1.0 - flagged, 0.0))
    return out


SUITES: dict[str, Callable[[], list]] = {
    "model": _model_checks,
    "specfun": _specfun_checks,
    "thinwall": _thinwall_checks,
    "picard": _picard_checks,
    "numeric": _numeric_checks,
}


def run_checks(modules=None) -> List[CheckResult]:
    results = []
    for mod, suite in SUITES.items():
        if modules is not None and mod not in modules:
            continue
        for name, value, tol in suite():
            value = float(value)
            results.append(CheckResult(mod, name, bool(np.isfinite(value) and value <= tol), value, float(tol)))
    return results
