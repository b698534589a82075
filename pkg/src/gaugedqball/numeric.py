"""Ground-truth radial solver for the coupled scalar/gauge field equations.

With ``phi = f(r) exp(i omega t)`` and ``g = omega - e A_0`` the static
equations are

    f'' + 2 f'/r + g^2 f = U'(f)      (U' = f - eps inside, f outside)
    g'' + 2 g'/r = e^2 f^2 g

with ``f'(0) = g'(0) = 0``, ``f -> 0`` and ``g -> omega`` at infinity.  The
surface radius ``R`` (where ``f = 1``) splits the domain; both sides are
solved together with ``R`` as a free parameter.

Two solvers are provided:

* ``method="collocation"`` (default) relaxes the whole coupled system with
  :func:`scipy.integrate.solve_bvp`, interior and exterior stacked on a
  common unit interval.  In charge mode ``omega`` becomes a second free
  parameter.  Relaxation stays well conditioned for large thin-wall balls,
  where the central value differs from its plateau by ``exp(-nu R)``.
* ``method="alternate"`` iterates :func:`solve_f_given_g` (shooting on
  ``f(0)``) and :func:`solve_g_given_f` (linear two-point problem) with
  under-relaxation.  Limited to moderate ``nu R``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate, optimize

from .model import DomainError, ModelParams, NoBoundStateError, nu as decay_rate
from .thinwall import NoSolutionError

__all__ = [
    "ConvergenceError",
    "RadialProfile",
    "Observables",
    "EnergyForms",
    "solve_g_given_f",
    "solve_f_given_g",
    "classify_shot",
    "solve_selfconsistent",
    "profile_from_functions",
    "charge",
    "energy",
    "gauss_identity",
    "gauss_surface_ratio",
    "scaling_defect",
    "asymptotic_fit",
    "coulomb_fit",
    "residuals",
    "max_residuals",
    "observables",
    "charge_family",
    "export_csv",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("r", "f", "g", "residual_f", "residual_g")


class ConvergenceError(RuntimeError):
    """A solver did not converge; ``history`` carries the residual trail."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True)
class RadialProfile:
    """Sampled solution ``(f, f', g, g')`` on ``0 = r_0 < ... < r_max``.

    ``surface_r`` is a grid node; intervals below it use the interior branch
    of the potential, intervals above it the exterior branch.
    """

    r: np.ndarray
    f: np.ndarray
    df: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    omega: float
    params: ModelParams
    surface_r: float
    method: str = "collocation"
    info: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def e(self):
        return self.params.e

    @property
    def epsilon(self):
        return self.params.epsilon

    @property
    def r_max(self):
        return float(self.r[-1])

    @property
    def grid(self):
        return self.r

    def interpolant(self):
        """Piecewise cubic Hermite interpolants ``(f, g)`` of the samples."""
        return (interpolate.CubicHermiteSpline(self.r, self.f, self.df),
                interpolate.CubicHermiteSpline(self.r, self.g, self.dg))


@dataclass(frozen=True)
class EnergyForms:
    virial: float  # omega Q / 2 + 4 pi int r^2 (f'^2/2 + U)
    direct: float  # 4 pi int r^2 (f'^2/2 + g'^2/2e^2 + g^2 f^2/2 + U)

    @property
    def rel_gap(self):
        return abs(self.virial - self.direct) / abs(self.direct) if self.direct else abs(self.virial)


@dataclass(frozen=True)
class Observables:
    q: float
    energy: float
    energy_direct: float
    surface_r: float
    f0: float
    decay: float
    omega: float
    de_dq: Optional[float] = None


# -- quadrature on a profile -----------------------------------------------------


def _hermite_mid(r, y, dy):
    h = np.diff(r)
    mid = 0.5 * (y[:-1] + y[1:]) + h / 8.0 * (dy[:-1] - dy[1:])
    dmid = 1.5 * (y[1:] - y[:-1]) / h - 0.25 * (dy[:-1] + dy[1:])
    return mid, dmid


class _Panels:
    """Per-interval Simpson panels with Hermite midpoints."""

    def __init__(self, p: RadialProfile):
        r = p.r
        self.r = r
        self.h = np.diff(r)
        self.rm = 0.5 * (r[:-1] + r[1:])
        self.fm, self.dfm = _hermite_mid(r, p.f, p.df)
        self.gm, self.dgm = _hermite_mid(r, p.g, p.dg)
        self.inside = r[1:] <= p.surface_r * (1 + 1e-14)

    def integrate(self, node_vals, mid_vals):
        return self.h / 6.0 * (node_vals[:-1] + 4.0 * mid_vals + node_vals[1:])


def _du(f, inside, epsilon):
    return np.where(inside, f - epsilon, f)


def _u(f, inside, epsilon):
    return np.where(inside, 0.5 * ((f - epsilon) ** 2 + epsilon * (2.0 - epsilon)), 0.5 * f * f)


def _tail_decay(p: RadialProfile):
    return math.sqrt(max(1.0 - p.g[-1] ** 2, 1e-30))


def charge(p: RadialProfile):
    """``Q = 4 pi int r^2 g f^2 dr`` with an exponential tail beyond ``r_max``."""
    pan = _Panels(p)
    r = p.r
    node = r * r * p.g * p.f**2
    mid = pan.rm**2 * pan.gm * pan.fm**2
    body = float(np.sum(pan.integrate(node, mid)))
    kappa = _tail_decay(p)
    tail = p.r_max**2 * p.g[-1] * p.f[-1] ** 2 / (2.0 * kappa)
    return 4.0 * math.pi * (body + tail)


def energy(p: RadialProfile) -> EnergyForms:
    """Total energy by the virial form and by direct integration of the density.

    The two agree through the Gauss-law identity
    ``int |grad g|^2 / e^2 = omega Q - int g^2 f^2``; the ``g'^2`` tail beyond
    ``r_max`` is added analytically from ``g = omega - e^2 Q / 4 pi r``.
    """
    pan = _Panels(p)
    r, eps, e = p.r, p.epsilon, p.e
    # both end nodes of a panel take the panel's branch of U
    u_left = _u(p.f[:-1], pan.inside, eps)
    u_right = _u(p.f[1:], pan.inside, eps)
    u_mid = _u(pan.fm, pan.inside, eps)

    def panel(node_l, node_r, mid):
        return pan.h / 6.0 * (node_l + 4.0 * mid + node_r)

    r2l, r2r, r2m = r[:-1] ** 2, r[1:] ** 2, pan.rm**2
    grad_pot = panel(r2l * (0.5 * p.df[:-1] ** 2 + u_left), r2r * (0.5 * p.df[1:] ** 2 + u_right),
                     r2m * (0.5 * pan.dfm**2 + u_mid))
    kappa = _tail_decay(p)
    f_tail = p.r_max**2 * p.f[-1] ** 2 / (2.0 * kappa)  # int r^2 f^2 beyond r_max
    scalar = 4.0 * math.pi * (float(np.sum(grad_pot)) + f_tail * (0.5 + 0.5 * kappa**2))
    q = charge(p)
    virial = 0.5 * p.omega * q + scalar
    gf = panel(r2l * p.g[:-1] ** 2 * p.f[:-1] ** 2, r2r * p.g[1:] ** 2 * p.f[1:] ** 2, r2m * pan.gm**2 * pan.fm**2)
    direct = scalar + 4.0 * math.pi * (0.5 * float(np.sum(gf)) + 0.5 * p.g[-1] ** 2 * f_tail)
    if e > 0:
        dg2 = panel(r2l * p.dg[:-1] ** 2, r2r * p.dg[1:] ** 2, r2m * pan.dgm**2)
        direct += 4.0 * math.pi * float(np.sum(dg2)) / (2.0 * e * e)
        direct += e * e * q * q / (8.0 * math.pi * p.r_max)
    return EnergyForms(virial, direct)


def gauss_identity(p: RadialProfile):
    """Both sides of ``4 pi int r^2 g'^2 / e^2 = omega Q - 4 pi int r^2 g^2 f^2``."""
    if p.e == 0:
        raise DomainError("the Gauss-law identity needs e > 0")
    pan = _Panels(p)
    r = p.r
    lhs_nodes = r * r * p.dg**2
    lhs = 4.0 * math.pi * float(np.sum(pan.integrate(lhs_nodes, pan.rm**2 * pan.dgm**2))) / p.e**2
    q = charge(p)
    lhs += p.e**2 * q * q / (4.0 * math.pi * p.r_max)
    gf = 4.0 * math.pi * float(np.sum(pan.integrate(r * r * p.g**2 * p.f**2, pan.rm**2 * pan.gm**2 * pan.fm**2)))
    return lhs, p.omega * q - gf


def _energy_parts(p: RadialProfile):
    # (T_f, T_g, P, V): gradient, Coulomb, g^2 f^2 / 2 and potential integrals
    pan = _Panels(p)
    r, eps, e = p.r, p.epsilon, p.e

    def integral(node, mid):
        return 4.0 * math.pi * float(np.sum(pan.integrate(node, mid)))

    t_f = integral(0.5 * r * r * p.df**2, 0.5 * pan.rm**2 * pan.dfm**2)
    pot = integral(0.5 * r * r * p.g**2 * p.f**2, 0.5 * pan.rm**2 * pan.gm**2 * pan.fm**2)
    u_l = _u(p.f[:-1], pan.inside, eps)
    u_r = _u(p.f[1:], pan.inside, eps)
    u_m = _u(pan.fm, pan.inside, eps)
    v = 4.0 * math.pi * float(np.sum(pan.h / 6.0 * (r[:-1] ** 2 * u_l + 4.0 * pan.rm**2 * u_m + r[1:] ** 2 * u_r)))
    t_g = 0.0
    if e > 0:
        t_g = integral(r * r * p.dg**2, pan.rm**2 * pan.dgm**2) / (2.0 * e * e)
        t_g += e * e * charge(p) ** 2 / (8.0 * math.pi * p.r_max)
    return t_f, t_g, pot, v


def scaling_defect(p: RadialProfile):
    """Derrick identity ``T_f - T_g - 3 (P - V)`` relative to the energy.

    The field equations make ``L = -T_f + T_g + P - V`` stationary; under
    ``f(r) -> f(lambda r)``, ``g(r) -> g(lambda r)`` its derivative at
    ``lambda = 1`` is minus this combination, so it vanishes on solutions.
    """
    t_f, t_g, pot, v = _energy_parts(p)
    return (t_f - t_g - 3.0 * (pot - v)) / (t_f + t_g + pot + v)


def gauss_surface_ratio(p: RadialProfile):
    """``4 pi r^2 g g'`` at ``r_max`` divided by ``e^2 Q omega``."""
    q = charge(p)
    return 4.0 * math.pi * p.r_max**2 * p.g[-1] * p.dg[-1] / (p.e**2 * q * p.omega)


def residuals(p: RadialProfile):
    """Scaled per-interval residuals of the scalar and gauge equations.

    For each interval ``[r_i, r_{i+1}]`` the integrated equations

        [r^2 f']  - int r^2 (U'(f) - g^2 f) dr
        [r^2 g']  - e^2 int r^2 f^2 g dr

    are evaluated with Simpson's rule (Hermite midpoints) and divided by
    ``int r^2 (1 + |U'| + |g^2 f|) dr`` resp. ``int r^2 (1 + e^2 f^2 |g|) dr``.
    Returns ``(res_f, res_g)``, one entry per interval.
    """
    pan = _Panels(p)
    r, eps, e = p.r, p.epsilon, p.e
    inside = pan.inside
    r2 = r * r
    du_l = _du(p.f[:-1], inside, eps)
    du_r = _du(p.f[1:], inside, eps)
    du_m = _du(pan.fm, inside, eps)
    src_l = r2[:-1] * (du_l - p.g[:-1] ** 2 * p.f[:-1])
    src_r = r2[1:] * (du_r - p.g[1:] ** 2 * p.f[1:])
    src_m = pan.rm**2 * (du_m - pan.gm**2 * pan.fm)
    src = pan.h / 6.0 * (src_l + 4.0 * src_m + src_r)
    flux = r2[1:] * p.df[1:] - r2[:-1] * p.df[:-1]
    sc = pan.h / 6.0 * (r2[:-1] * (1 + np.abs(du_l) + np.abs(p.g[:-1] ** 2 * p.f[:-1]))
                        + 4.0 * pan.rm**2 * (1 + np.abs(du_m) + np.abs(pan.gm**2 * pan.fm))
                        + r2[1:] * (1 + np.abs(du_r) + np.abs(p.g[1:] ** 2 * p.f[1:])))
    res_f = (flux - src) / sc
    gsrc_n = e * e * r2 * p.f**2 * p.g
    gsrc = pan.integrate(gsrc_n, e * e * pan.rm**2 * pan.fm**2 * pan.gm)
    gflux = r2[1:] * p.dg[1:] - r2[:-1] * p.dg[:-1]
    gsc = pan.integrate(r2 * (1 + np.abs(gsrc_n / np.where(r2 > 0, r2, 1.0))),
                        pan.rm**2 * (1 + e * e * pan.fm**2 * np.abs(pan.gm)))
    res_g = (gflux - gsrc) / gsc
    return res_f, res_g


def max_residuals(p: RadialProfile):
    res_f, res_g = residuals(p)
    return float(np.max(np.abs(res_f))), float(np.max(np.abs(res_g)))


def _node_residuals(p: RadialProfile):
    # per-node residual for CSV export: max of adjoining intervals
    res_f, res_g = residuals(p)
    out_f = np.zeros_like(p.r)
    out_g = np.zeros_like(p.r)
    out_f[:-1] = np.abs(res_f)
    out_f[1:] = np.maximum(out_f[1:], np.abs(res_f))
    out_g[:-1] = np.abs(res_g)
    out_g[1:] = np.maximum(out_g[1:], np.abs(res_g))
    return out_f, out_g


def _tail_window(p: RadialProfile, window=None):
    if window is not None:
        lo, hi = window
    else:
        fmax = float(np.max(p.f))
        below = np.nonzero(p.f < 1e-3 * fmax)[0]
        if below.size == 0:
            raise DomainError("profile has no tail below 1e-3 of its maximum")
        lo = p.r[below[0]]
        tiny = np.nonzero(p.f < 1e-11 * fmax)[0]
        hi = p.r[tiny[0]] if tiny.size else p.r_max
        hi = min(hi, p.r_max - 0.1 * (p.r_max - lo))
    mask = (p.r >= lo) & (p.r <= hi) & (p.f > 0)
    if np.count_nonzero(mask) < 8 or hi <= lo:
        raise DomainError(f"tail window [{lo:.4g}, {hi:.4g}] holds too few samples for a fit")
    return mask


def asymptotic_fit(p, window=None, coulomb=None):
    """Fit ``f ~ f0 exp(-decay r) / r`` on the far tail.

    ``p`` is a :class:`RadialProfile` or a pair of arrays ``(r, f)``.  By
    default the window runs from where ``f`` drops below ``1e-3`` of its
    maximum to ``1e-11`` of it.  For ``e > 0`` the Coulomb tail of ``g``
    adds a power-law factor ``r^(-B)`` to the exponential; with ``coulomb``
    (default: ``e > 0``) ``ln(r f)`` is fitted as ``ln f0 - decay r - B ln r``.
    Returns ``(f0, decay)``.
    """
    if isinstance(p, RadialProfile):
        mask = _tail_window(p, window)
        r, f = p.r[mask], p.f[mask]
        if coulomb is None:
            coulomb = p.e > 0
    else:
        r, f = (np.asarray(a, dtype=float) for a in p)
        if window is not None:
            sel = (r >= window[0]) & (r <= window[1])
            r, f = r[sel], f[sel]
        if r.size < 3:
            raise DomainError("tail window holds too few samples for a fit")
        coulomb = bool(coulomb)
    y = np.log(r * f)
    cols = [np.ones_like(r), -r]
    if coulomb:
        cols.append(-np.log(r))
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), y, rcond=None)
    return float(np.exp(coef[0])), float(coef[1])


def coulomb_fit(p: RadialProfile, window=None):
    """Fit ``g = omega - C/r`` beyond the scalar tail; returns ``C`` (compare ``e^2 Q / 4 pi``)."""
    if window is None:
        fmax = float(np.max(p.f))
        lo = p.r[np.nonzero(p.f < 1e-8 * fmax)[0][0]] if np.any(p.f < 1e-8 * fmax) else p.r[len(p.r) // 2]
        window = (lo, p.r_max)
    mask = (p.r >= window[0]) & (p.r <= window[1])
    r, g = p.r[mask], p.g[mask]
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(r), -1.0 / r]), g, rcond=None)
    return float(coef[1])


# -- linear sub-problems ------------------------------------------------------------


def _series_start(r0, y0, curvature):
    # y(r0) ~ y0 + curvature r0^2 / 2, y'(r0) ~ curvature r0 (regular at the origin)
    return y0 + 0.5 * curvature * r0 * r0, curvature * r0


def solve_g_given_f(f: Callable, e: float, omega: float, grid, rtol: float = 1e-12):
    """Gauge function for a given scalar profile.

    Solves ``g'' + 2 g'/r = e^2 f^2 g`` with ``g'(0) = 0`` and the Coulomb
    condition ``r g' + g = omega`` at ``grid[-1]``.  The equation is linear,
    so ``g = c y`` with ``y`` the regular solution ``y(0) = 1``; ``c`` follows
    from the outer condition.  Returns ``(g, g')`` sampled on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must start at 0 and increase strictly")
    if e == 0:
        return np.full_like(grid, omega), np.zeros_like(grid)
    e2 = e * e

    def rhs(r, y):
        return [y[1], -2.0 * y[1] / r + e2 * f(r) ** 2 * y[0]]

    r0 = min(1e-6, grid[1] * 1e-3)
    y0 = _series_start(r0, 1.0, e2 * f(0.0) ** 2 / 3.0)
    sol = integrate.solve_ivp(rhs, (r0, grid[-1]), y0, method="DOP853", rtol=rtol, atol=1e-14,
                              dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"gauge integration failed: {sol.message}")
    y = np.empty((2, grid.size))
    y[:, 0] = (1.0, 0.0)
    y[:, 1:] = sol.sol(grid[1:])
    r_max = grid[-1]
    c = omega / (r_max * y[1, -1] + y[0, -1])
    return c * y[0], c * y[1]


def _shoot_parts(g: Callable, epsilon: float, r_end: float, rtol: float):
    # homogeneous and particular interior solutions on [0, r_end]
    def rhs(r, y):
        k2 = 1.0 - g(r) ** 2
        return [y[1], -2.0 * y[1] / r + k2 * y[0], y[3], -2.0 * y[3] / r + k2 * y[2] - epsilon]

    r0 = 1e-6
    k20 = 1.0 - g(0.0) ** 2
    h0 = _series_start(r0, 1.0, k20 / 3.0)
    p0 = _series_start(r0, 0.0, -epsilon / 3.0)
    sol = integrate.solve_ivp(rhs, (r0, r_end), [*h0, *p0], method="DOP853", rtol=rtol, atol=1e-14,
                              dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"interior integration failed: {sol.message}")
    return sol


def _decaying_exterior(g: Callable, r_lo: float, r_max: float, rtol: float):
    # decaying solution of f'' + 2f'/r = (1 - g^2) f, integrated inward (stable)
    kap = math.sqrt(max(1.0 - g(r_max) ** 2, 1e-30))

    def rhs(r, y):
        return [y[1], -2.0 * y[1] / r + (1.0 - g(r) ** 2) * y[0]]

    y_end = [1.0, -(kap + 1.0 / r_max)]
    sol = integrate.solve_ivp(rhs, (r_max, r_lo), y_end, method="DOP853", rtol=rtol, atol=1e-300,
                              dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"exterior integration failed: {sol.message}")
    return sol


def _first_crossing(interior, f0, r_end):
    # first radius where f = yp + f0 yh drops to 1; None if it never does
    ts = interior.t
    ys = interior.y
    fvals = ys[2] + f0 * ys[0]
    idx = np.nonzero(fvals <= 1.0)[0]
    if idx.size == 0:
        return None
    i = idx[0]
    if i == 0:
        return ts[0]
    fun = lambda r: (lambda y: y[2] + f0 * y[0] - 1.0)(interior.sol(r))
    return optimize.brentq(fun, ts[i - 1], ts[i], xtol=1e-15, rtol=4 * np.finfo(float).eps)


class _Shooter:
    """Shooting on ``f(0)`` for a fixed gauge profile.

    Both branches are linear for fixed ``g``: inside ``f = y_p + f(0) y_h``;
    outside ``f`` is proportional to the decaying solution.  A shot is an
    overshoot when its slope at the ``f = 1`` crossing is steeper than the
    decaying solution's, an undershoot otherwise.
    """

    def __init__(self, g, omega, epsilon, r_max, rtol=1e-12):
        self.g, self.omega, self.epsilon, self.r_max, self.rtol = g, omega, epsilon, r_max, rtol
        self.interior = _shoot_parts(g, epsilon, r_max, rtol)
        self._ext = {}

    def exterior(self, r_lo):
        key = round(r_lo, 6)
        if key not in self._ext:
            self._ext[key] = _decaying_exterior(self.g, max(r_lo - 1.0, 1e-6), self.r_max, self.rtol)
        return self._ext[key]

    def mismatch(self, f0):
        rs = _first_crossing(self.interior, f0, self.r_max)
        if rs is None:
            return None, None
        y = self.interior.sol(rs)
        slope_in = y[3] + f0 * y[1]
        ext = self.exterior(rs).sol(rs)
        slope_out = ext[1] / ext[0]
        return slope_in - slope_out, rs


def classify_shot(g: Callable, omega: float, epsilon: float, f0: float, r_max: float = 60.0):
    """``"overshoot"`` or ``"undershoot"`` for a shot with central value ``f0``."""
    sh = _Shooter(g, omega, epsilon, r_max)
    m, _ = sh.mismatch(f0)
    if m is None:
        return "undershoot"
    return "overshoot" if m < 0 else "undershoot"


def solve_f_given_g(g: Callable, omega: float, epsilon: float, guess: Optional[float] = None,
                    r_max: Optional[float] = None, grid=None, rtol: float = 1e-12):
    """Scalar profile for a fixed gauge function by shooting on ``f(0)``.

    Returns ``(grid, f, f', surface_r)``; ``grid`` contains ``surface_r``.
    The bisection bracket is found by scanning ``f(0)`` downward from the
    interior plateau ``eps / (1 - g(0)^2)``.
    """
    if omega >= 1.0:
        raise NoBoundStateError(f"omega={omega!r} >= 1 admits no bound state")
    kap = math.sqrt(1.0 - omega**2)
    if r_max is None:
        r_max = 40.0 + 25.0 / kap
    k20 = 1.0 - g(0.0) ** 2
    if k20 <= 0:
        raise NoSolutionError("interior is not confining: g(0) >= 1")
    plateau = epsilon / k20
    if plateau <= 1.0:
        raise NoSolutionError(f"interior plateau {plateau:.6g} <= 1: no ball for omega={omega!r}")
    sh = _Shooter(g, omega, epsilon, r_max, rtol)

    def mismatch(f0):
        m, _ = sh.mismatch(f0)
        return -np.inf if m is None else m

    hi = plateau * (1.0 - 1e-14)
    m_hi = mismatch(hi)
    if guess is not None and 1.0 < guess < plateau:
        starts = [guess]
    else:
        starts = []
    lo = None
    for cand in starts + list(1.0 + (plateau - 1.0) * np.linspace(0.95, 0.0, 40)[1:]):
        if mismatch(cand) < 0 <= m_hi or (m_hi < 0 and mismatch(cand) >= 0):
            lo = cand
            break
    if lo is None or not np.isfinite(m_hi):
        raise NoSolutionError(f"no overshoot/undershoot bracket for f(0) in (1, {plateau:.6g}) at omega={omega!r}")
    a, b = sorted((lo, hi))
    f0 = optimize.brentq(mismatch, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    _, rs = sh.mismatch(f0)
    if grid is None:
        grid = _default_grid(rs, r_max)
    else:
        grid = np.unique(np.r_[np.asarray(grid, dtype=float), rs])
        grid = grid[grid <= r_max]
    inside = grid <= rs
    f = np.empty_like(grid)
    df = np.empty_like(grid)
    yin = sh.interior.sol(grid[inside][1:])
    f[0], df[0] = f0, 0.0
    f[1:np.count_nonzero(inside)] = yin[2] + f0 * yin[0]
    df[1:np.count_nonzero(inside)] = yin[3] + f0 * yin[1]
    ext = sh.exterior(rs)
    ref = ext.sol(rs)[0]
    yout = ext.sol(grid[~inside])
    f[~inside] = yout[0] / ref
    df[~inside] = yout[1] / ref
    i_s = np.count_nonzero(inside) - 1
    f[i_s] = 1.0
    return grid, f, df, rs


def _default_grid(rs, r_max, h_max=0.02, n_wall=200):
    # uniform spacing h_max, graded geometrically towards the wall on both sides
    d = np.geomspace(1e-5, 1.0, n_wall)
    # the r^2 weight makes the first panels sensitive, so grade towards the origin too
    pts = np.r_[np.arange(0.0, r_max, h_max), r_max, rs, rs * (1.0 - d), rs + d, h_max * np.geomspace(1e-3, 1.0, 40)]
    pts = np.unique(pts[(pts >= 0.0) & (pts <= r_max)])
    keep = [0]
    for i in range(1, pts.size):
        if pts[i] == rs or pts[i] - pts[keep[-1]] >= 2e-6:
            if pts[keep[-1]] != rs and pts[i] - pts[keep[-1]] < 2e-6:
                keep.pop()
            keep.append(i)
    return pts[keep]


# -- collocation solver ---------------------------------------------------------------


def _collocation_system(e, epsilon, L, q_mode, q_scale=1.0):
    # charge components are carried in units of q_scale (the target charge)
    e2 = e * e
    cq = 4.0 * math.pi / q_scale

    def fun(s, y, p):
        R = p[0]
        F, P, G, H, Fo, Po, Go, Ho = y[:8]
        r_in = R * s
        r_out = R + L * (1.0 - s)
        out = np.empty_like(y)
        out[0] = P
        out[1] = R * R * ((1.0 - G * G) * F - epsilon)
        out[2] = H
        out[3] = R * R * e2 * F * F * G
        out[4] = Po
        out[5] = 2.0 * L * Po / r_out + L * L * (1.0 - Go * Go) * Fo
        out[6] = Ho
        out[7] = 2.0 * L * Ho / r_out + L * L * e2 * Fo * Fo * Go
        if q_mode:
            out[8] = cq * R * r_in**2 * G * F * F
            out[9] = -cq * L * r_out**2 * Go * Fo * Fo
        return out

    def fun_jac(s, y, p):
        R = p[0]
        n = y.shape[0]
        F, P, G, H, Fo, Po, Go, Ho = y[:8]
        r_in = R * s
        r_out = R + L * (1.0 - s)
        m = s.size
        dfy = np.zeros((n, n, m))
        dfy[0, 1] = 1.0
        dfy[1, 0] = R * R * (1.0 - G * G)
        dfy[1, 2] = -2.0 * R * R * G * F
        dfy[2, 3] = 1.0
        dfy[3, 0] = 2.0 * R * R * e2 * F * G
        dfy[3, 2] = R * R * e2 * F * F
        dfy[4, 5] = 1.0
        dfy[5, 4] = L * L * (1.0 - Go * Go)
        dfy[5, 5] = 2.0 * L / r_out
        dfy[5, 6] = -2.0 * L * L * Go * Fo
        dfy[6, 7] = 1.0
        dfy[7, 4] = 2.0 * L * L * e2 * Fo * Go
        dfy[7, 6] = L * L * e2 * Fo * Fo
        dfy[7, 7] = 2.0 * L / r_out
        k = 2 if q_mode else 1
        dfp = np.zeros((n, k, m))
        dr_out = 1.0  # d r_out / dR
        dfp[1, 0] = 2.0 * R * ((1.0 - G * G) * F - epsilon)
        dfp[3, 0] = 2.0 * R * e2 * F * F * G
        dfp[5, 0] = -2.0 * L * Po / r_out**2 * dr_out
        dfp[7, 0] = -2.0 * L * Ho / r_out**2 * dr_out
        if q_mode:
            dfy[8, 0] = 2.0 * cq * R * r_in**2 * G * F
            dfy[8, 2] = cq * R * r_in**2 * F * F
            dfy[9, 4] = -2.0 * cq * L * r_out**2 * Go * Fo
            dfy[9, 6] = -cq * L * r_out**2 * Fo * Fo
            dfp[8, 0] = cq * (r_in**2 + 2.0 * R * r_in * s) * G * F * F
            dfp[9, 0] = -2.0 * cq * L * r_out * Go * Fo * Fo
        return dfy, dfp

    return fun, fun_jac


def _collocation_bc(omega_fixed, q_target, L, q_mode):
    def bc(ya, yb, p):
        R = p[0]
        omega = p[1] if q_mode else omega_fixed
        r_max = R + L
        go = ya[6]
        kap = math.sqrt(max(1.0 - go * go, 1e-12))
        res = [
            ya[1],  # f'(0)
            ya[3],  # g'(0)
            -ya[5] / L + (kap + 1.0 / r_max) * ya[4],  # decaying scalar at r_max
            r_max * (-ya[7] / L) + ya[6] - omega,  # Coulomb gauge at r_max
            yb[0] - 1.0,
            yb[4] - 1.0,
            yb[1] / R + yb[5] / L,
            yb[2] - yb[6],
            yb[3] / R + yb[7] / L,
        ]
        if q_mode:
            res += [ya[8], yb[8] - yb[9], ya[9] - 1.0]
        return np.array(res)

    return bc


def _collocation_mesh(R, L, n=None):
    # one geometric sequence in the distance 1 - s from the wall, from about
    # 1e-3 in r on the longer side out to the origin / far boundary
    d_min = 1e-3 / max(R, L)
    if n is None:
        n = int(math.log(1.0 / d_min) / math.log(1.01)) + 1
    d = np.geomspace(d_min, 1.0, n)
    return np.r_[0.0, 1.0 - d[::-1][1:], 1.0]


def _default_exterior_length(omega, e=0.0, q=0.0):
    kap = math.sqrt(1.0 - omega**2)
    return max(30.0 / kap, 40.0)


def _guess_functions(params: ModelParams, omega, R, f_center=None):
    from .picard import WeakCouplingProfile, profile_f, profile_df

    eps = params.epsilon
    n = math.sqrt(1.0 - omega**2)
    a = eps / n**2
    if f_center is not None and f_center > 1.0:
        # pick the interior shape that reproduces the requested central value
        a = max(a, f_center + 1e-6)
    b = (1.0 - a) * R / math.sinh(n * R) if n * R < 700 else 0.0
    wp = WeakCouplingProfile(a, b, n, R, omega, eps)
    f = lambda r: profile_f(r, wp)
    df = lambda r: profile_df(r, wp)
    return f, df


def _collocation_guess(params: ModelParams):
    from .picard import WeakCouplingProfile, match_radius, profile_df, profile_f
    from .thinwall import exact_solution, g_profile

    e, eps = params.e, params.epsilon
    if params.mode == "omega":
        # the ungauged closed form with g = omega; exact at e = 0
        omega = params.omega
        try:
            R = match_radius(omega, eps)
        except NoSolutionError:
            R = 3.0
        n = decay_rate(omega)
        wp = WeakCouplingProfile(eps / n**2, 0.0, n, R, omega, eps)
        f = lambda r: profile_f(r, wp)
        df = lambda r: profile_df(r, wp)
        g = lambda r: np.full_like(np.asarray(r, dtype=float), omega)
        dg = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        return omega, R, f, df, g, dg
    # charge mode: thin-wall radius and gauge field, interior at the local plateau;
    # this selects the large-ball branch of the family
    q = params.q
    e = max(e, 1e-6)
    tw = exact_solution(q, e, eps)
    R = tw.r_star
    omega = min(tw.omega, 0.999)
    if omega**2 <= 1 - eps / 2:
        omega = 0.5 * (math.sqrt(1 - eps / 2) + 1.0)
    g_inf = g_profile(1e12, q, R, tw.f_tilde, e)
    g = lambda r: g_profile(r, q, R, tw.f_tilde, e) + (omega - g_inf)
    n_in = math.sqrt(max(1.0 - float(g(0.0)) ** 2, 1e-6))
    a_in = eps / n_in**2
    wp_in = WeakCouplingProfile(a_in, 0.0, n_in, R, omega, eps)
    wp_out = WeakCouplingProfile(a_in, 0.0, decay_rate(omega), R, omega, eps)

    def f(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, profile_f(np.minimum(r, R), wp_in), profile_f(np.maximum(r, R), wp_out))

    def df(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, profile_df(np.minimum(r, R), wp_in), profile_df(np.maximum(r, R), wp_out))

    return omega, R, f, df, g, None


def _guess_from_profile(p: RadialProfile):
    """Starting functions for the collocation solver from a converged profile."""
    fs, gs = p.interpolant()
    r_max, f_end, g_end = p.r_max, p.f[-1], p.g[-1]
    kap = _tail_decay(p)
    coul = r_max * (p.omega - g_end)

    def f(r):
        r = np.asarray(r, dtype=float)
        rc = np.minimum(r, r_max)
        tail = f_end * (r_max / np.maximum(r, r_max)) * np.exp(-kap * (np.maximum(r, r_max) - r_max))
        return np.where(r <= r_max, fs(rc), tail)

    def df(r):
        r = np.asarray(r, dtype=float)
        rc = np.minimum(r, r_max)
        rt = np.maximum(r, r_max)
        return np.where(r <= r_max, fs.derivative()(rc), -f(rt) * (kap + 1.0 / rt))

    def g(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= r_max, gs(np.minimum(r, r_max)), p.omega - coul / np.maximum(r, r_max))

    def dg(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= r_max, gs.derivative()(np.minimum(r, r_max)), coul / np.maximum(r, r_max) ** 2)

    return p.omega, p.surface_r, f, df, g, dg


def _initial_state(params: ModelParams, guess, L):
    q_mode = params.mode == "q"
    omega, R, f, df, g, dg = guess
    s = _collocation_mesh(R, L)
    r_in = R * s
    r_out = R + L * (1.0 - s)
    if dg is None:
        dg = lambda r: (g(r + 1e-6) - g(np.maximum(r - 1e-6, 0.0))) / (r + 1e-6 - np.maximum(r - 1e-6, 0.0))
    n = 10 if q_mode else 8
    y = np.zeros((n, s.size))
    y[0], y[1] = f(r_in), R * df(r_in)
    y[2], y[3] = g(r_in), R * dg(r_in)
    y[4], y[5] = f(r_out), -L * df(r_out)
    y[6], y[7] = g(r_out), -L * dg(r_out)
    y[3, 0] = 0.0
    p0 = [R]
    if q_mode:
        y[8] = s**3
        y[9] = 1.0
        p0.append(omega)
    return s, y, np.array(p0)


# successive collocation tolerances; a loose first pass lets Newton settle on
# a coarse mesh before refinement starts
_TOL_STAGES = (1e-3, 1e-5)


def _solve_collocation(params: ModelParams, L=None, tol=1e-8, max_nodes=40_000, guess=None, init=None,
                       verbose=0):
    e, eps = params.e, params.epsilon
    q_mode = params.mode == "q"
    if init is None:
        if guess is None:
            guess = _collocation_guess(params)
        if L is None:
            L = _default_exterior_length(guess[0])
        s, y, p = _initial_state(params, guess, L)
    else:
        s, y, p = init
    n = y.shape[0]
    S = np.zeros((n, n))
    S[1, 1] = -2.0
    S[3, 3] = -2.0
    fun, jac = _collocation_system(e, eps, L, q_mode, params.q if q_mode else 1.0)
    bc = _collocation_bc(params.omega, params.q, L, q_mode)
    stages = [t for t in _TOL_STAGES if t > tol] + [tol]
    for stage_tol in stages:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = integrate.solve_bvp(fun, bc, s, y, p=p, S=S, fun_jac=jac, tol=stage_tol,
                                      max_nodes=max_nodes, verbose=verbose, bc_tol=1e-11)
        if not sol.success:
            raise ConvergenceError(f"collocation failed at tol={stage_tol:g}: {sol.message}",
                                   history=[float(np.max(sol.rms_residuals))])
        s, y, p = sol.x, sol.y, sol.p
    return sol, L


def _profile_from_collocation(sol, L, params, refine=2):
    R = float(sol.p[0])
    q_mode = params.mode == "q"
    omega = float(sol.p[1]) if q_mode else params.omega
    s = sol.x
    if refine > 1:
        pieces = [s[:-1] + (s[1:] - s[:-1]) * (j / refine) for j in range(refine)]
        s = np.unique(np.r_[np.concatenate(pieces), s[-1]])
    y = sol.sol(s)
    r_in = R * s
    r_out = R + L * (1.0 - s)
    r = np.r_[r_in, r_out[::-1][1:]]
    f = np.r_[y[0], y[4][::-1][1:]]
    df = np.r_[y[1] / R, -y[5][::-1][1:] / L]
    g = np.r_[y[2], y[6][::-1][1:]]
    dg = np.r_[y[3] / R, -y[7][::-1][1:] / L]
    df[0] = 0.0
    dg[0] = 0.0
    info = {"nodes": int(sol.x.size), "exterior_length": L, "niter": int(sol.niter),
            "max_rms_residual": float(np.max(sol.rms_residuals)), "mode": params.mode}
    if q_mode:
        info["q_target"] = params.q
        params = ModelParams(params.e, params.epsilon, omega=omega)
    return RadialProfile(r, f, df, g, dg, omega, params, R, "collocation", info)


# -- alternating fixed point -------------------------------------------------------


def _spline(grid, y, dy):
    return interpolate.CubicHermiteSpline(grid, y, dy, extrapolate=True)


def _solve_alternate(params: ModelParams, tol=1e-9, max_iter=200, alpha=0.5, r_max=None):
    if params.mode != "omega":
        raise DomainError("the alternating solver works at fixed omega")
    e, eps, omega = params.e, params.epsilon, params.omega
    kap = decay_rate(omega)
    if r_max is None:
        r_max = 40.0 + 25.0 / kap
    g_fun = lambda r: omega + 0.0 * np.asarray(r, dtype=float)
    grid, f, df, rs = solve_f_given_g(g_fun, omega, eps, r_max=r_max)
    if e == 0:
        g = np.full_like(grid, omega)
        return RadialProfile(grid, f, df, g, np.zeros_like(grid), omega, params, rs, "alternate",
                             {"niter": 1, "history": [0.0]})
    history = []
    g_old, dg_old = solve_g_given_f(_spline(grid, f, df), e, omega, grid)
    f_old = f
    for it in range(1, max_iter + 1):
        g_spl = _spline(grid, g_old, dg_old)
        grid_new, f_new, df_new, rs = solve_f_given_g(g_spl, omega, eps, r_max=r_max, grid=grid)
        g_new, dg_new = solve_g_given_f(_spline(grid_new, f_new, df_new), e, omega, grid_new)
        g_prev = g_spl(grid_new)
        dg_prev = g_spl.derivative()(grid_new)
        f_prev = _spline(grid, f_old, np.gradient(f_old, grid))(grid_new) if grid_new.size != grid.size else f_old
        change = max(float(np.max(np.abs(g_new - g_prev))), float(np.max(np.abs(f_new - f_prev))))
        history.append(change)
        if change <= tol:
            g_fin, dg_fin = g_new, dg_new
            grid = grid_new
            f, df = f_new, df_new
            break
        if len(history) > 1 and history[-1] > history[-2]:
            alpha *= 0.5
        grid = grid_new
        g_old = alpha * g_new + (1.0 - alpha) * g_prev
        dg_old = alpha * dg_new + (1.0 - alpha) * dg_prev
        f_old = f_new
    else:
        raise ConvergenceError(f"alternating iteration did not converge in {max_iter} steps", history)
    # one last consistent pair so both equations hold with the same (f, g)
    g_spl = _spline(grid, g_fin, dg_fin)
    grid, f, df, rs = solve_f_given_g(g_spl, omega, eps, r_max=r_max, grid=grid)
    g, dg = solve_g_given_f(_spline(grid, f, df), e, omega, grid)
    return RadialProfile(grid, f, df, g, dg, omega, params, rs, "alternate", {"niter": it, "history": history})


# -- public driver -----------------------------------------------------------------


def solve_selfconsistent(params: ModelParams, method: str = "collocation", tol: float = 1e-8,
                         r_max: Optional[float] = None, max_iter: int = 200, alpha: float = 0.5,
                         guess: Optional[RadialProfile] = None) -> RadialProfile:
    """Solve the coupled equations for ``params``.

    In frequency mode (``params.omega`` set) the frequency is fixed; in charge
    mode (``params.q`` set) the collocation solver treats ``omega`` as an
    unknown constrained by the charge, and the alternating solver brackets
    ``omega`` on the map ``omega -> Q(omega)``.

    ``guess`` warm-starts the collocation solver from a nearby converged
    profile (continuation along a family).  ``r_max`` is a lower bound on the
    outer radius; by default it is ``R + max(30/nu, 40)``.
    """
    if params.mode == "omega" and params.omega >= 1.0:
        raise NoBoundStateError(f"omega={params.omega!r} >= 1 admits no bound state")
    if method == "collocation":
        return _collocation_driver(params, tol=tol, r_max=r_max, guess=guess)
    if method == "alternate":
        if params.mode == "q":
            return _alternate_q_mode(params, tol=tol, max_iter=max_iter, alpha=alpha)
        return _solve_alternate(params, tol=tol, max_iter=max_iter, alpha=alpha, r_max=r_max)
    raise DomainError(f"unknown method {method!r}")


def _collocation_driver(params, tol, r_max, guess):
    if guess is None and params.mode == "omega" and params.e > 0:
        try:
            return _collocation_driver(params, tol, r_max, _collocation_driver(
                replace(params, e=0.0), tol, r_max, None))
        except ConvergenceError:
            return _ramp_coupling(params, tol, r_max)
    start = _guess_from_profile(guess) if guess is not None else _collocation_guess(params)
    for _ in range(4):
        omega, R = start[0], start[1]
        L = _default_exterior_length(omega)
        if r_max is not None:
            L = max(L, r_max - R)
        sol, L = _solve_collocation(params, L=L, tol=tol, guess=start)
        w = float(sol.p[1]) if params.mode == "q" else params.omega
        if not 0.0 < w < 1.0:
            raise NoSolutionError(f"charge Q={params.q!r} is beyond the bound-state family (omega -> {w:.6g})")
        prof = _profile_from_collocation(sol, L, params)
        # the exterior must hold many decay lengths of the converged frequency
        if L * decay_rate(w) >= 20.0:
            return prof
        start = _guess_from_profile(prof)
    raise ConvergenceError("exterior length did not settle for the converged frequency")


def _ramp_coupling(params, tol, r_max, max_halvings=4):
    # continuation in e^2 from the ungauged solution, halving the step on failure;
    # a stalled ramp means the fixed-omega family folds back before reaching e
    prof = _collocation_driver(replace(params, e=0.0), tol, r_max, None)
    target = params.e**2
    done, step = 0.0, target / 4.0
    halvings = 0
    while done < target:
        nxt = min(done + step, target)
        try:
            prof = _collocation_driver(replace(params, e=math.sqrt(nxt)), tol, r_max, prof)
            done = nxt
        except ConvergenceError:
            halvings += 1
            if halvings > max_halvings:
                raise NoSolutionError(
                    f"no solution at omega={params.omega!r}, epsilon={params.epsilon!r}, e={params.e!r}: "
                    f"the fixed-omega family continued from e=0 ends near e={math.sqrt(done):.4g} "
                    f"(Q={charge(prof):.6g} there)") from None
            step *= 0.5
    return prof


def _alternate_q_mode(params, **kw):
    eps, e, q = params.epsilon, params.e, params.q
    lo = math.sqrt(1.0 - eps / 2.0) + 1e-3
    grid = np.linspace(lo, 0.99, 25)
    qs = []
    for w in grid:
        try:
            qs.append(charge(_solve_alternate(ModelParams(e, eps, omega=w), **kw)))
        except (NoSolutionError, ConvergenceError):
            qs.append(np.nan)
    qs = np.array(qs)
    ok = np.isfinite(qs)
    d = np.diff(qs[ok])
    if not (np.all(d < 0) or np.all(d > 0)):
        raise NoSolutionError("omega -> Q(omega) is not monotone on the scanned window")
    target = lambda w: charge(_solve_alternate(ModelParams(e, eps, omega=w), **kw)) - q
    wv = grid[ok]
    vals = qs[ok] - q
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if idx.size == 0:
        raise NoSolutionError(f"no omega in ({lo:.4g}, 0.99) reaches Q={q!r}")
    w = optimize.brentq(target, wv[idx[0]], wv[idx[0] + 1], xtol=1e-12)
    return _solve_alternate(ModelParams(e, eps, omega=w), **kw)


def profile_from_functions(r, f, df, g, dg, omega, params, surface_r, method="external"):
    """Wrap externally supplied samples (e.g. analytic profiles) as a :class:`RadialProfile`."""
    r = np.asarray(r, dtype=float)
    return RadialProfile(r, np.asarray(f, float), np.asarray(df, float), np.asarray(g, float),
                         np.asarray(dg, float), omega, params, surface_r, method, {})


def observables(p: RadialProfile) -> Observables:
    q = charge(p)
    en = energy(p)
    f0, decay = asymptotic_fit(p)
    return Observables(q, en.virial, en.direct, p.surface_r, f0, decay, p.omega)


def charge_family(e, epsilon, omegas, **kw):
    """Solve along ``omegas`` and return ``(Q, E, dE/dQ)`` arrays.

    ``dE/dQ`` uses centred differences in ``omega`` (one-sided at the ends);
    it should reproduce ``omega`` itself.
    """
    qs, es = [], []
    for w in omegas:
        p = solve_selfconsistent(ModelParams(e, epsilon, omega=float(w)), **kw)
        qs.append(charge(p))
        es.append(energy(p).virial)
    qs, es = np.array(qs), np.array(es)
    de_dq = np.gradient(es, np.asarray(omegas)) / np.gradient(qs, np.asarray(omegas))
    return qs, es, de_dq


def export_csv(p: RadialProfile, path):
    """Write ``r, f, g, residual_f, residual_g`` with 17 significant digits."""
    res_f, res_g = _node_residuals(p)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(p.r, p.f, p.g, res_f, res_g):
            w.writerow([f"{v:.17g}" for v in row])
