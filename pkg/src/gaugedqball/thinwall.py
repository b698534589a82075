"""Thin-wall gauged Q-balls.

The scalar field is a step ``f = f_tilde * theta(R - r)``.  Inside the ball
the gauge equation ``g'' + 2 g'/r = e^2 f_tilde^2 g`` gives
``g ~ sinh(e f_tilde r)/r``; outside ``g = omega - e^2 Q/(4 pi r)``.  Matching
the charge fixes ``omega`` (:func:`omega_of`) and the energy reduces to
:func:`energy`.  Two regimes have closed forms:

* small coupling, ``e f_tilde R << 1`` and ``1 < eps < 2``
  (:func:`small_coupling_solution`, :func:`q_max`);
* degenerate minima, ``eps = 2`` with ``e f_tilde R >> 1``
  (:func:`degenerate_solution`).

:func:`exact_solution` minimizes the full step-ansatz energy numerically and
is what the closed forms are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import DomainError, potential_u

__all__ = [
    "NoSolutionError",
    "ThinWallSolution",
    "VALIDITY_THRESHOLD",
    "one_minus_tanhc",
    "g_profile",
    "omega_of",
    "energy",
    "energy_dr",
    "stationary_radius",
    "stationary_radius_printed",
    "printed_radius_residual",
    "small_coupling_energy",
    "small_coupling_f_tilde",
    "small_coupling_f_tilde_printed",
    "small_coupling_radius",
    "small_coupling_e_star",
    "small_coupling_solution",
    "q_max",
    "q_max_printed",
    "degenerate_energy",
    "degenerate_solution",
    "exact_solution",
]

VALIDITY_THRESHOLD = 0.3


class NoSolutionError(RuntimeError):
    """A root or extremum could not be bracketed."""


@dataclass(frozen=True)
class ThinWallSolution:
    f_tilde: float
    r_star: float
    e_star: float
    omega: float
    q: float
    branch: str  # "small-coupling", "degenerate" or "exact"
    validity: float  # e * f_tilde * r_star
    valid: bool = True


def one_minus_tanhc(x):
    """``1 - tanh(x)/x`` without cancellation for small ``x``."""
    x = np.abs(np.asarray(x, dtype=float))
    x2 = x * x
    series = x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0 - x2 * (17.0 / 315.0 - x2 * 62.0 / 2835.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 1.0 - np.tanh(x) / x
    out = np.where(x < 1e-2, series, direct)
    return out if out.ndim else float(out)


def _xcothx_minus_one(x):
    # x coth(x) - 1 = x^2/3 - x^4/45 + 2 x^6/945 - ...
    x = np.abs(np.asarray(x, dtype=float))
    x2 = x * x
    series = x2 * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 / 4725.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x / np.tanh(x) - 1.0
    out = np.where(x < 1e-2, series, direct)
    return out if out.ndim else float(out)


def _check_positive(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val!r}")


def omega_of(q, r_ball, f_tilde, e):
    """Frequency of a step profile carrying charge ``q`` inside radius ``r_ball``.

    ``omega = (e^2 Q / 4 pi R) / (1 - tanh(x)/x)`` with ``x = e f_tilde R``; at
    ``e = 0`` this is the uniform-charge value ``3 Q / (4 pi f_tilde^2 R^3)``.
    """
    _check_positive(q=q, r_ball=r_ball, f_tilde=f_tilde)
    if e < 0:
        raise DomainError(f"e must be >= 0, got {e!r}")
    if e == 0:
        return 3.0 * q / (4.0 * math.pi * f_tilde**2 * r_ball**3)
    x = e * f_tilde * r_ball
    return e * e * q / (4.0 * math.pi * r_ball) / one_minus_tanhc(x)


def g_profile(r, q, r_ball, f_tilde, e):
    """Gauge function ``g = omega - e A_0`` of the step profile.

    ``omega`` follows from :func:`omega_of`.  Accepts scalar or array ``r``.
    """
    omega = omega_of(q, r_ball, f_tilde, e)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    g_wall = omega - e * e * q / (4.0 * math.pi * r_ball)
    k = e * f_tilde
    inside = r <= r_ball
    out = np.empty_like(r)
    rin = r[inside]
    kr = k * rin
    kr_ball = k * r_ball
    if k == 0:
        out[inside] = g_wall
    else:
        # R sinh(k r) / (r sinh(k R)), written to avoid overflow for large k R
        with np.errstate(divide="ignore", invalid="ignore"):
            shape = np.where(
                kr > 1e-8,
                (r_ball / np.where(rin > 0, rin, 1.0)) * np.exp(kr - kr_ball) * (-np.expm1(-2 * kr)) / (-np.expm1(-2 * kr_ball)),
                kr_ball / np.sinh(kr_ball) if kr_ball < 700 else 0.0,
            )
        out[inside] = g_wall * shape
    rout = r[~inside]
    out[~inside] = omega - e * e * q / (4.0 * math.pi * rout)
    return out if out.ndim else float(out)


def energy(q, r_ball, f_tilde, e, epsilon):
    """Step-ansatz energy: Coulomb/kinetic part ``omega Q / 2`` plus volume term."""
    _check_positive(q=q, r_ball=r_ball, f_tilde=f_tilde)
    omega = omega_of(q, r_ball, f_tilde, e)
    return 0.5 * omega * q + 4.0 * math.pi / 3.0 * float(potential_u(f_tilde, epsilon)) * r_ball**3


def energy_dr(q, r_ball, f_tilde, e, epsilon):
    """Analytic ``dE/dR`` of :func:`energy` at fixed ``Q`` and ``f_tilde``."""
    u = float(potential_u(f_tilde, epsilon))
    vol = 4.0 * math.pi * u * r_ball**2
    if e == 0:
        return -9.0 * q * q / (8.0 * math.pi * f_tilde**2 * r_ball**4) + vol
    # E_c = (e^2 Q^2 / 8 pi) * R^{-1} / h(x), h = 1 - tanh(x)/x, x = k R
    k = e * f_tilde
    x = k * r_ball
    h = one_minus_tanhc(x)
    # h'(x) = tanh(x)/x^2 - sech^2(x)/x
    if x < 1e-2:
        dh = x * (2.0 / 3.0 - x * x * (8.0 / 15.0 - x * x * 102.0 / 315.0))
    else:
        dh = math.tanh(x) / x**2 - 1.0 / (x * math.cosh(x) ** 2) if x < 350 else 1.0 / x**2
    pref = e * e * q * q / (8.0 * math.pi)
    return -pref / (r_ball**2 * h) - pref * k * dh / (r_ball * h * h) + vol


def _leading_radius(q, f_tilde, epsilon):
    u = float(potential_u(f_tilde, epsilon))
    return (9.0 * q * q / (32.0 * math.pi**2 * f_tilde**2 * u)) ** (1.0 / 6.0)


def _bracket_scan(fun, center, what):
    grid = center * np.geomspace(1e-3, 1e3, 121)
    vals = np.array([fun(x) for x in grid])
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if idx.size == 0:
        raise NoSolutionError(f"no sign change of {what} for R in [{grid[0]:.6g}, {grid[-1]:.6g}]")
    i = idx[0]
    return grid[i], grid[i + 1]


def stationary_radius(q, f_tilde, e, epsilon):
    """Radius where ``dE/dR = 0`` for the step-ansatz energy at fixed charge."""
    _check_positive(q=q, f_tilde=f_tilde)
    r0 = _leading_radius(q, f_tilde, epsilon)
    fun = lambda r: energy_dr(q, r, f_tilde, e, epsilon)
    a, b = _bracket_scan(fun, r0, "dE/dR")
    return optimize.brentq(fun, a, b, xtol=1e-14 * r0, rtol=4 * np.finfo(float).eps, maxiter=500)


def printed_radius_residual(r_ball, q, f_tilde, e, epsilon):
    """``4 pi sqrt(2U/f^2) R [x coth x - 1] - e^2 Q``, the commonly quoted radius condition.

    It agrees with ``dE/dR = 0`` only at leading order in ``x = e f_tilde R``;
    see :func:`stationary_radius`.
    """
    u = float(potential_u(f_tilde, epsilon))
    x = e * f_tilde * r_ball
    return 4.0 * math.pi * math.sqrt(2.0 * u) / f_tilde * r_ball * _xcothx_minus_one(x) - e * e * q


def stationary_radius_printed(q, f_tilde, e, epsilon):
    """Root in ``R`` of :func:`printed_radius_residual` (``e > 0``)."""
    _check_positive(q=q, f_tilde=f_tilde, e=e)
    r0 = _leading_radius(q, f_tilde, epsilon)
    fun = lambda r: printed_radius_residual(r, q, f_tilde, e, epsilon)
    a, b = _bracket_scan(fun, r0, "the radius condition")
    return optimize.brentq(fun, a, b, xtol=1e-14 * r0, rtol=4 * np.finfo(float).eps, maxiter=500)


# -- small coupling -------------------------------------------------------------


def small_coupling_energy(q, f_tilde, e, epsilon):
    """Step energy at its stationary radius to first order in ``e^2``.

    ``E = Q w [1 + (e^2/5) (3 f Q / 4 pi)^(2/3) w^(-2/3)]`` with
    ``w = sqrt(2 U(f)/f^2)``.
    """
    u = float(potential_u(f_tilde, epsilon))
    w = math.sqrt(2.0 * u) / f_tilde
    corr = e * e / 5.0 * (3.0 * f_tilde * q / (4.0 * math.pi)) ** (2.0 / 3.0) * w ** (-2.0 / 3.0)
    return q * w * (1.0 + corr)


def small_coupling_f_tilde(q, e, epsilon):
    """Interior field value minimizing :func:`small_coupling_energy`.

    Analytically, to first order,
    ``f = 2 - (16 e^2 / 15 eps) (9 Q^2 (1 - eps/2)^2 / 32 pi^2)^(1/3)``; the
    numerical minimum is returned.
    """
    if e == 0:
        return 2.0
    fun = lambda f: small_coupling_energy(q, f, e, epsilon)
    res = optimize.minimize_scalar(fun, bracket=(1.5, 2.0), bounds=(1.0 + 1e-9, 2.0), method="bounded",
                                   options={"xatol": 1e-12})
    return float(res.x)


def small_coupling_f_tilde_printed(q, e, epsilon):
    """``2 - (8 e^2 / 5 eps) [Q^2 (1 - eps/2)^2 / 3 pi]^(1/3)``, the commonly quoted form."""
    return 2.0 - 8.0 * e * e / (5.0 * epsilon) * (q * q * (1.0 - 0.5 * epsilon) ** 2 / (3.0 * math.pi)) ** (1.0 / 3.0)


def _coulomb_parameter(q, e, epsilon):
    s = math.sqrt(2.0 * (2.0 - epsilon))
    return (3.0 * e**3 * q / (math.pi * s)) ** (2.0 / 3.0)


def small_coupling_radius(q, e, epsilon):
    s = math.sqrt(2.0 * (2.0 - epsilon))
    r0 = (3.0 * q / (8.0 * math.pi * s)) ** (1.0 / 3.0)
    return r0 * (1.0 + _coulomb_parameter(q, e, epsilon) / 45.0)


def small_coupling_e_star(q, e, epsilon):
    return q * math.sqrt(1.0 - 0.5 * epsilon) * (1.0 + _coulomb_parameter(q, e, epsilon) / 5.0)


def _check_small_coupling(q, e, epsilon):
    if epsilon == 2.0:
        raise DomainError("epsilon = 2 is the degenerate branch; use degenerate_solution")
    if not (1.0 < epsilon < 2.0):
        raise DomainError(f"small-coupling branch needs 1 < epsilon < 2, got {epsilon!r}")
    if e < 0:
        raise DomainError(f"e must be >= 0, got {e!r}")
    _check_positive(q=q)


def small_coupling_solution(q, e, epsilon, threshold=VALIDITY_THRESHOLD):
    """Closed-form thin-wall ball for ``e f_tilde R << 1``.

    The result is flagged (``valid=False``), not rejected, when
    ``e f_tilde R`` exceeds ``threshold``.
    """
    _check_small_coupling(q, e, epsilon)
    f_star = small_coupling_f_tilde(q, e, epsilon)
    r_star = small_coupling_radius(q, e, epsilon)
    e_star = small_coupling_e_star(q, e, epsilon)
    omega = omega_of(q, r_star, f_star, e)
    validity = e * f_star * r_star
    return ThinWallSolution(f_star, r_star, e_star, omega, q, "small-coupling", validity, validity <= threshold)


def q_max(e, epsilon):
    """Largest charge with ``dE*/dQ <= 1`` for the small-coupling energy.

    Solving ``d/dQ [Q w (1 + (K Q)^(2/3)/5)] = 1`` with
    ``K = 3 e^3 / (pi sqrt(2 (2 - eps)))`` and ``w = sqrt(1 - eps/2)`` gives
    ``Q_max = (2 pi / 3 e^3) [3 (sqrt(2/(2 - eps)) - 1)]^(3/2) sqrt((2 - eps)/2)``.
    Returns ``inf`` at ``e = 0``.
    """
    if not (1.0 < epsilon < 2.0):
        raise DomainError(f"q_max needs 1 < epsilon < 2, got {epsilon!r}")
    if e < 0:
        raise DomainError(f"e must be >= 0, got {e!r}")
    if e == 0:
        return math.inf
    w = math.sqrt((2.0 - epsilon) / 2.0)
    return 2.0 * math.pi / (3.0 * e**3) * (3.0 * (1.0 / w - 1.0)) ** 1.5 * w


def q_max_printed(e, epsilon):
    """``(2 pi / 3 e^2) [5 (sqrt(2/(2 - eps)) - 1)]^(3/2) sqrt((2 - eps)/2)``.

    The commonly quoted closed form; it does not satisfy ``dE*/dQ = 1`` for
    :func:`small_coupling_e_star` and is kept for comparison only.
    """
    if e == 0:
        return math.inf
    w = math.sqrt((2.0 - epsilon) / 2.0)
    return 2.0 * math.pi / (3.0 * e**2) * (5.0 * (1.0 / w - 1.0)) ** 1.5 * w


# -- degenerate minima ----------------------------------------------------------


def degenerate_energy(q, r_ball, e, epsilon=2.0):
    """Surface-dominated energy ``e^2 Q^2 / 8 pi R + 4 pi eps R^2``."""
    return e * e * q * q / (8.0 * math.pi * r_ball) + 4.0 * math.pi * epsilon * r_ball**2


def degenerate_solution(q, e):
    """Thin-wall ball for degenerate minima (``eps = 2``) and ``e f_tilde R >> 1``.

    ``R* = (e^2 Q^2 / 128 pi^2)^(1/3)``, ``E* = 3 (eQ)^(4/3) / (2^(5/3) pi^(1/3))``
    and ``omega = dE*/dQ = e^2 Q / 4 pi R*``, which reaches 1 at
    ``Q_max = pi / 2 e^4``.  ``valid`` requires ``e f_tilde R* >= 1``.
    """
    _check_positive(q=q, e=e)
    r_star = (e * e * q * q / (128.0 * math.pi**2)) ** (1.0 / 3.0)
    e_star = 3.0 * (e * q) ** (4.0 / 3.0) / (2.0 ** (5.0 / 3.0) * math.pi ** (1.0 / 3.0))
    omega = e * e * q / (4.0 * math.pi * r_star)
    f_tilde = 2.0
    validity = e * f_tilde * r_star
    return ThinWallSolution(f_tilde, r_star, e_star, omega, q, "degenerate", validity, validity >= 1.0)


def degenerate_q_max(e):
    _check_positive(e=e)
    return math.pi / (2.0 * e**4)


# -- full step-ansatz minimization ----------------------------------------------


def exact_solution(q, e, epsilon):
    """Minimize the step-ansatz energy over ``R`` and ``f_tilde`` at fixed charge.

    For each ``f_tilde`` the radius is the root of ``dE/dR = 0``; the outer
    one-dimensional minimization runs over ``f_tilde`` in ``(1, eps + 2]``.
    """
    _check_positive(q=q)
    if not (1.0 < epsilon <= 2.0):
        raise DomainError(f"epsilon must satisfy 1 < epsilon <= 2, got {epsilon!r}")

    def e_of_f(f):
        r = stationary_radius(q, f, e, epsilon)
        return energy(q, r, f, e, epsilon)

    res = optimize.minimize_scalar(e_of_f, bounds=(1.0 + 1e-6, epsilon + 2.0), method="bounded",
                                   options={"xatol": 1e-10})
    f_star = float(res.x)
    r_star = stationary_radius(q, f_star, e, epsilon)
    e_star = energy(q, r_star, f_star, e, epsilon)
    omega = omega_of(q, r_star, f_star, e)
    return ThinWallSolution(f_star, r_star, e_star, omega, q, "exact", e * f_star * r_star, True)
