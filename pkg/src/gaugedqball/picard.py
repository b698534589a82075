"""Gauge profiles beyond the thin wall by successive approximation.

With ``r g = exp(u)`` and ``v = u'`` the gauge equation becomes the Riccati
equation ``v' = e^2 f^2 - v^2``, i.e. ``v = v0 + int_{r0}^r (e^2 f^2 - v^2)``.
Starting from the thin-wall ``v_1`` and the ungauged scalar profile

    f = a + b sinh(nu r)/r        (r <= R)
    f = (R/r) exp(nu (R - r))     (r >  R)

one substitution gives ``v_2`` in closed form (hyperbolic sine integrals inside,
exponential integrals outside), and ``g`` follows from
``g(r) = g(R) (R/r) exp(int_R^r v)``.

The matching radius ``R`` is the one that makes ``f`` continuously
differentiable (:func:`match_radius`), so that ``f`` solves the ``e = 0``
field equations exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate, optimize

from .model import DomainError, nu as decay_rate
from .specfun import chin, ei_tail, expn_scaled, shi
from .thinwall import NoSolutionError

__all__ = [
    "PoleError",
    "WeakCouplingProfile",
    "PicardSolution",
    "match_radius",
    "weak_coupling_profile",
    "profile_f",
    "profile_df",
    "weak_coupling_charge",
    "picard_solution",
    "v1",
    "v2_closed",
    "v2_printed",
    "picard_step",
    "picard_iterate",
    "picard_converge",
    "g_reconstruct",
    "g1_closed",
    "g2_closed",
    "g2_printed",
]


class PoleError(DomainError):
    """The exterior thin-wall ``v_1`` has a pole inside the domain."""


def _coth_minus_inv(x):
    if x < 1e-3:
        return x / 3.0 - x**3 / 45.0
    return 1.0 / math.tanh(x) - 1.0 / x


def match_radius(omega, epsilon):
    """Radius at which the interior and exterior ``e = 0`` profiles join smoothly.

    Writing ``x = nu R`` and ``a = eps/nu^2`` the condition ``f'(R-) = f'(R+)``
    reads ``(a - 1)(coth x - 1/x) = 1 + 1/x``.  Its left side increases and its
    right side decreases in ``x``, so a root exists iff ``a > 2``, i.e.
    ``omega^2 > 1 - eps/2``.
    """
    if not (1.0 < epsilon <= 2.0):
        raise DomainError(f"epsilon must satisfy 1 < epsilon <= 2, got {epsilon!r}")
    n = decay_rate(omega)
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega!r}")
    a = epsilon / n**2
    if a <= 2.0:
        raise NoSolutionError(
            f"no smooth e=0 profile for omega={omega!r}, epsilon={epsilon!r}: need omega^2 > 1 - epsilon/2"
        )
    fun = lambda x: (a - 1.0) * _coth_minus_inv(x) - 1.0 - 1.0 / x
    hi = max(2.0 * a / (a - 2.0), 1.0)
    lo = 1e-8
    while fun(hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise NoSolutionError(f"matching radius not bracketed up to nu R = {hi:.3g}")
    x = optimize.brentq(fun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return x / n


@dataclass(frozen=True)
class WeakCouplingProfile:
    a: float
    b: float
    nu: float
    r_match: float
    omega: float
    epsilon: float

    @property
    def f_tilde(self):
        """Central value ``f(0) = a + b nu``."""
        return self.a + self.b * self.nu


def weak_coupling_profile(omega, epsilon, r_match=None):
    """Ungauged scalar profile; ``r_match`` defaults to :func:`match_radius`."""
    n = decay_rate(omega)
    if r_match is None:
        r_match = match_radius(omega, epsilon)
    a = epsilon / n**2
    b = (1.0 - a) * r_match / math.sinh(n * r_match)
    return WeakCouplingProfile(a, b, n, r_match, omega, epsilon)


def _sinhc_ratio(nu, r, R):
    # R sinh(nu r) / (r sinh(nu R)) for r <= R, overflow-free
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (R / r) * np.exp(nu * (r - R)) * np.expm1(-2 * nu * r) / np.expm1(-2 * nu * R)
    small = R * nu / math.sinh(nu * R) if nu * R < 700 else 0.0
    return np.where(r > 0, ratio, small)


def profile_f(r, wp: WeakCouplingProfile):
    """Scalar field of the ungauged profile."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    R, n = wp.r_match, wp.nu
    inner = wp.a + (1.0 - wp.a) * _sinhc_ratio(n, np.minimum(r, R), R)
    with np.errstate(divide="ignore", over="ignore"):
        outer = (R / np.where(r > 0, r, 1.0)) * np.exp(n * (R - r))
    out = np.where(r <= R, inner, outer)
    return out if out.ndim else float(out)


def profile_df(r, wp: WeakCouplingProfile):
    """Radial derivative of :func:`profile_f` (zero at the origin)."""
    r = np.asarray(r, dtype=float)
    R, n = wp.r_match, wp.nu
    rr = np.where(r > 0, r, 1.0)
    ri = np.minimum(rr, R)
    x = n * ri
    # d/dr ln(sinh(nu r)/r) = nu coth(nu r) - 1/r, with its series near 0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_slope = np.where(x > 1e-3, n / np.tanh(x) - 1.0 / ri, n * x / 3.0 * (1.0 - x * x / 15.0))
    inner = (1.0 - wp.a) * _sinhc_ratio(n, ri, R) * log_slope
    with np.errstate(over="ignore", invalid="ignore"):
        outer = -(R / rr) * np.exp(n * (R - rr)) * (1.0 / rr + n)
    out = np.where(r <= R, np.where(r > 0, inner, 0.0), outer)
    return out if out.ndim else float(out)


def weak_coupling_charge(wp: WeakCouplingProfile):
    """``omega * 4 pi int r^2 f^2 dr`` of the ungauged profile."""
    R = wp.r_match
    f2 = lambda r: r * r * profile_f(r, wp) ** 2
    inner, _ = integrate.quad(f2, 0.0, R, epsabs=0.0, epsrel=1e-13, limit=200)
    outer, _ = integrate.quad(f2, R, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return 4.0 * math.pi * wp.omega * (inner + outer)


@dataclass(frozen=True)
class PicardSolution:
    profile: WeakCouplingProfile
    e: float
    q: float
    c_const: float
    order: object = 2  # 1, 2 or "n"

    @property
    def k(self):
        """Interior thin-wall wavenumber ``e (a + b nu)``."""
        return self.e * self.profile.f_tilde

    @property
    def pole(self):
        """``e^2 Q / 4 pi omega``, where the exterior ``v_1`` diverges."""
        return self.e**2 * self.q / (4.0 * math.pi * self.profile.omega)

    @property
    def g_wall(self):
        return self.profile.omega - self.e**2 * self.q / (4.0 * math.pi * self.profile.r_match)


def _interior_v2_raw(r, wp, e):
    # antiderivative of e^2 f^2 - v_1^2 inside, without the constant
    a, b, n = wp.a, wp.b, wp.nu
    k = e * wp.f_tilde
    r = float(r)
    sh = math.sinh(n * r)
    coth_term = k / math.tanh(k * r) if k > 0 else 1.0 / r
    return (
        e * e * a * a * r
        + 2 * e * e * a * b * shi(n * r).value
        + e * e * b * b * (n * shi(2 * n * r).value - sh * sh / r)
        + coth_term
        - k * k * r
    )


def _exterior_v2(r, wp, e, q):
    R, n = wp.r_match, wp.nu
    p = e * e * q / (4.0 * math.pi * wp.omega)
    r = float(r)
    x = 2 * n * r
    decay = math.exp(-2 * n * (r - R))
    # e^2 R^2 e^{2 nu R} [-e^{-2 nu r}/r - 2 nu Ei(-2 nu r)], Ei(-x) = -e^{-x} (e^x E1(x))
    tail = e * e * R * R * decay * (-1.0 / r + 2 * n * expn_scaled(1, x))
    return 1.0 / (r - p) + tail


def picard_solution(omega, epsilon, e, q=None, r_match=None, order=2):
    """Assemble the coefficient bundle for ``v_1``/``v_2``/``g_2`` evaluation.

    ``q`` defaults to the ungauged charge :func:`weak_coupling_charge`; the
    constant ``C`` makes ``v_2`` continuous at the matching radius.
    """
    if e < 0:
        raise DomainError(f"e must be >= 0, got {e!r}")
    wp = weak_coupling_profile(omega, epsilon, r_match)
    if q is None:
        q = weak_coupling_charge(wp)
    p = e * e * q / (4.0 * math.pi * omega)
    if p >= wp.r_match:
        raise PoleError(f"exterior pole e^2 Q/(4 pi omega) = {p:.6g} lies outside the ball radius {wp.r_match:.6g}")
    c = _exterior_v2(wp.r_match, wp, e, q) - _interior_v2_raw(wp.r_match, wp, e)
    return PicardSolution(wp, e, q, c, order)


def _check_pole(r, sol):
    p = sol.pole
    if p > 0 and np.any(np.isclose(r, p, rtol=1e-14, atol=0.0)):
        raise PoleError(f"r = {p:.6g} is the pole of the exterior v_1")


def _vectorize(fn, r):
    arr = np.asarray(r, dtype=float)
    out = np.fromiter((fn(x) for x in arr.ravel()), dtype=float, count=arr.size).reshape(arr.shape)
    return out if out.ndim else float(out)


def v1(r, sol: PicardSolution):
    """Thin-wall log-derivative ``d/dr ln(r g)``: ``k coth(k r)`` inside, ``1/(r - p)`` outside."""
    _check_pole(r, sol)
    R, k, p = sol.profile.r_match, sol.k, sol.pole

    def one(x):
        if not x > 0:
            raise DomainError("v is singular at r = 0")
        if x <= R:
            return k / math.tanh(k * x) if k > 0 else 1.0 / x
        return 1.0 / (x - p)

    return _vectorize(one, r)


def v2_closed(r, sol: PicardSolution):
    """Second Picard iterate, anchored at ``v(inf) = 0`` and continuous at ``R``."""
    _check_pole(r, sol)
    wp, e, q = sol.profile, sol.e, sol.q
    R = wp.r_match

    def one(x):
        if not x > 0:
            raise DomainError("v is singular at r = 0")
        if x <= R:
            return _interior_v2_raw(x, wp, e) + sol.c_const
        return _exterior_v2(x, wp, e, q)

    return _vectorize(one, r)


def v2_printed(r, sol: PicardSolution):
    """Second iterate as commonly printed: ``1/2`` on the ``sinh^2`` term and ``c = R e^{nu R}``.

    The constant is fixed by continuity at ``R`` in the same way as in
    :func:`v2_closed`.  Kept for comparison only.
    """
    wp, e = sol.profile, sol.e
    R, b, n = wp.r_match, wp.b, wp.nu

    def half_fix(x):
        sh = math.sinh(n * x)
        return 0.5 * e * e * b * b * sh * sh / x

    c_printed = _exterior_v2(R, wp, e, sol.q) - _interior_v2_raw(R, wp, e) - half_fix(R)

    def one(x):
        if x <= R:
            return _interior_v2_raw(x, wp, e) + half_fix(x) + c_printed
        return _exterior_v2(x, wp, e, sol.q)

    return _vectorize(one, r)


def picard_step(v_n: Callable, f: Callable, e: float, r0: float, v0: float,
                epsabs: float = 1e-10, breakpoints=()):
    """One successive-approximation step for ``v' = e^2 f^2 - v^2``.

    Returns the callable ``v_{n+1}(r) = v0 + int_{r0}^r (e^2 f^2 - v_n^2) dt``
    evaluated by adaptive quadrature.  ``r0`` may be ``inf``.  ``breakpoints``
    (e.g. the matching radius) are passed on to the integrator.
    """
    integrand = lambda t: e * e * f(t) ** 2 - v_n(t) ** 2
    bps = sorted(float(b) for b in breakpoints)

    def segment(lo, hi):
        if lo == hi:
            return 0.0
        inner = [b for b in bps if lo < b < hi]
        edges = [lo, *inner, hi]
        total = 0.0
        for x0, x1 in zip(edges[:-1], edges[1:]):
            val, err, *rest = integrate.quad(integrand, x0, x1, epsabs=epsabs * 0.1, epsrel=1e-12,
                                            limit=500, full_output=1)
            if len(rest) > 1 and err > epsabs:
                raise ArithmeticError(f"quadrature on [{x0:.6g}, {x1:.6g}] did not converge: {rest[1]}; "
                                      f"estimated error {err:.3g}")
            total += val
        return total

    def one(r):
        r = float(r)
        if r0 == np.inf:
            return v0 - segment(r, np.inf)
        if r >= r0:
            return v0 + segment(r0, r)
        return v0 - segment(r, r0)

    return lambda r: _vectorize(one, r)


def picard_iterate(sol: PicardSolution, n: int, grid, f: Optional[Callable] = None):
    """Numerical iterates ``v_1 ... v_n`` on ``grid`` (anchored at infinity).

    Each iterate is represented by a cubic spline on ``grid`` (which should
    contain the matching radius); beyond the last grid point it is continued as
    ``1/(r - p_n)`` matched there, which is the exact exterior shape once
    ``f`` has died off.  Returns an array of shape ``(n, len(grid))``.
    """
    grid = np.asarray(grid, dtype=float)
    if f is None:
        f = lambda r: profile_f(r, sol.profile)
    e = sol.e
    f2 = e * e * np.asarray(f(grid)) ** 2
    # tail of e^2 f^2 beyond the grid: the exterior profile in closed form
    wp = sol.profile
    r_hi = grid[-1]
    f2_tail, _ = integrate.quad(lambda t: e * e * f(t) ** 2, r_hi, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    iterates = [np.asarray(v1(grid, sol), dtype=float)]
    split = np.searchsorted(grid, wp.r_match, side="right")
    for _ in range(n - 1):
        v = iterates[-1]
        integrand = f2 - v * v
        # integrate piecewise so the jump of v_1 at R does not smear
        cum = np.zeros_like(grid)
        for lo, hi in ((0, split), (split - 1, len(grid))):
            seg = slice(lo, hi)
            spl = interpolate.CubicSpline(grid[seg], integrand[seg])
            anti = spl.antiderivative()
            vals = anti(grid[seg])
            if lo == 0:
                cum[seg] = vals - vals[-1]
            else:
                cum[seg] = vals - vals[0] + cum[lo]
        # from r to the grid end, plus the analytic tail
        v_end = v[-1]
        tail = f2_tail - v_end
        new = -(cum[-1] - cum) - tail
        iterates.append(new)
    return np.array(iterates)


def picard_converge(sol: PicardSolution, grid, tol: float = 1e-8, max_iter: int = 60,
                    f: Optional[Callable] = None):
    """Iterate until the sup-norm change on ``grid`` drops below ``tol``.

    The Riccati map is not a contraction near the origin (its Lipschitz
    constant is about ``2/r``), so the changes first grow and then fall off
    factorially before reaching a floor set by the spline representation.
    Iteration also stops once that floor is reached, i.e. when the last four
    changes agree to within a factor 1.2.

    Returns ``(v, n, history)``: the last iterate on ``grid``, its order and
    the sequence of sup-norm changes.
    """
    its = picard_iterate(sol, max_iter, grid, f=f)
    history = []
    for i in range(1, len(its)):
        d = float(np.max(np.abs(its[i] - its[i - 1])))
        history.append(d)
        if d < tol:
            return its[i], i + 1, history
        last = history[-4:]
        if len(last) == 4 and max(last) < 1.2 * min(last):
            return its[i], i + 1, history
    return its[-1], len(its), history


def g_reconstruct(v: Callable, q: float, r_ball: float, omega: float, e: float, r,
                  epsabs: float = 1e-12):
    """Gauge function from a log-derivative: ``g(r) = g(R) (R/r) exp(int_R^r v dt)``.

    ``g(R) = omega - e^2 Q / (4 pi R)``.  The integrable ``1/t`` part is taken
    analytically, so ``v`` may carry the ``1/r`` singularity at the origin.
    """
    g_wall = omega - e * e * q / (4.0 * math.pi * r_ball)
    w = lambda t: v(t) - 1.0 / t
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    order = np.argsort(r_arr)
    rs = r_arr[order]
    logs = np.empty_like(rs)
    # walk outward and inward from R accumulating int_R^r w
    above = rs >= r_ball
    acc, prev = 0.0, r_ball
    for i in np.nonzero(above)[0]:
        acc += integrate.quad(w, prev, rs[i], epsabs=epsabs, epsrel=1e-12, limit=200)[0]
        prev = rs[i]
        logs[i] = acc
    acc, prev = 0.0, r_ball
    for i in np.nonzero(~above)[0][::-1]:
        if rs[i] <= 0:
            raise DomainError("reconstruction needs r > 0")
        acc -= integrate.quad(w, rs[i], prev, epsabs=epsabs, epsrel=1e-12, limit=200)[0]
        prev = rs[i]
        logs[i] = acc
    if np.any(logs > 700):
        bad = rs[np.argmax(logs)]
        raise OverflowError(f"exp overflow reconstructing g at r = {bad:.6g}")
    out = np.empty_like(rs)
    out[order] = g_wall * np.exp(logs)
    return out if np.ndim(r) else float(out[0])


def g1_closed(r, sol: PicardSolution):
    """Thin-wall gauge profile with ``f_tilde = a + b nu`` and radius ``R``."""
    wp = sol.profile
    R, k = wp.r_match, sol.k

    def one(x):
        if x <= R:
            if k == 0:
                return sol.g_wall
            return sol.g_wall * _sinhc(k * x) / _sinhc(k * R)
        return wp.omega - sol.e**2 * sol.q / (4.0 * math.pi * x)

    return _vectorize(one, r)


def _sinhc(x):
    return 1.0 if x == 0 else math.sinh(x) / x


def _interior_log_g2(x, sol):
    # int_R^x (v_2 - 1/t) dt for x <= R, excluding the sinhc ratio
    wp, e = sol.profile, sol.e
    a, b, n, R = wp.a, wp.b, wp.nu, wp.r_match
    k = sol.k

    def anti(t):
        return (
            0.5 * e * e * a * a * t * t
            + 2 * e * e * a * b * (t * shi(n * t).value - math.cosh(n * t) / n)
            + e * e * b * b * n * (t * shi(2 * n * t).value - math.cosh(2 * n * t) / (2 * n))
            - 0.5 * e * e * b * b * chin(2 * n * t).value
            - 0.5 * k * k * t * t
            + sol.c_const * t
        )

    return anti(x) - anti(R)


def _exterior_log_g2(x, sol):
    # int_R^x (v_2 - 1/(t - p)) dt for x >= R
    wp, e = sol.profile, sol.e
    R, n = wp.r_match, wp.nu

    def anti(t):
        s = 2 * n * t
        decay = math.exp(-2 * n * (t - R))
        # -Ei(-2 nu t) + 2 nu tail(t), both scaled by R^2 e^{2 nu R}
        return R * R * decay * (expn_scaled(1, s) - expn_scaled(2, s))

    return e * e * (anti(x) - anti(R))


def g2_closed(r, sol: PicardSolution):
    """Order-2 gauge profile from the closed-form integral of :func:`v2_closed`."""
    wp = sol.profile
    R, k = wp.r_match, sol.k

    def one(x):
        if not x > 0:
            raise DomainError("closed form needs r > 0")
        if x <= R:
            shape = _sinhc(k * x) / _sinhc(k * R)
            return sol.g_wall * shape * math.exp(_interior_log_g2(x, sol))
        base = wp.omega - sol.e**2 * sol.q / (4.0 * math.pi * x)
        return base * math.exp(_exterior_log_g2(x, sol))

    return _vectorize(one, r)


def g2_printed(r, sol: PicardSolution):
    """Order-2 gauge profile exactly as commonly printed; for comparison only."""
    wp, e = sol.profile, sol.e
    a, b, n, R = wp.a, wp.b, wp.nu, wp.r_match
    k = sol.k
    g_wall = sol.g_wall
    ei_r = lambda x: -math.exp(-x) * expn_scaled(1, x)

    def one(x):
        if x <= R:
            expo = (
                0.5 * e * e * (2 * a * b * n + b * b * n * n) * (R * R - x * x)
                + 2 * e * e * a * b * (x * shi(n * x).value - R * shi(n * R).value)
                + 2.0 / n * e * e * a * b * (math.cosh(n * R) - math.cosh(n * x))
                + e * e * b * b * n * (x * shi(2 * n * x).value - R * shi(2 * n * R).value)
                + e * e * b * b * (math.cosh(2 * n * R) - math.cosh(2 * n * x))
                + e * e * R * R * n
                + 2 * e * e * R * R * n * math.exp(2 * n * R) * ei_tail(R, n).value
            )
            shape = math.sinh(k * x) / math.sinh(k * R) if k > 0 else 1.0
            return g_wall * shape * (x / R) ** (0.5 * e * e * b * b - 1.0) * math.exp(expo)
        expo = e * e * R * R * n * math.exp(2 * n * R) * (ei_r(2 * n * x) + ei_tail(x, n).value)
        return g_wall * math.exp(expo)

    return _vectorize(one, r)
