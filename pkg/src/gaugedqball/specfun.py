"""Exponential and hyperbolic integrals in double precision.

Each public routine returns a :class:`SpecFunResult` carrying an estimate of
the absolute error, so that callers comparing closed forms against quadrature
can set tolerances from it.  Evaluation schemes:

* ``E_n(x)``, ``x > 0``: power series for ``x <= 1``, modified Lentz continued
  fraction above.
* ``Ei(x)``, ``x > 0``: power series for ``x <= 40``, asymptotic series above.
* ``Shi``/``Chin``: power series for ``|x| <= 40``, combinations of ``Ei`` and
  ``E_1`` above.

``Chin(x) = Chi(x) - gamma - ln x = int_0^x (cosh t - 1)/t dt`` is the entire part
of the hyperbolic cosine integral.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .model import DomainError

__all__ = [
    "SpecFunResult",
    "RangeError",
    "SingularityError",
    "expn",
    "e1",
    "expn_scaled",
    "ei",
    "shi",
    "chin",
    "ei_tail",
    "ei_integral_representation",
    "ei_values",
    "shi_values",
    "chin_values",
    "SERIES_CUTOFF",
    "OVERFLOW_GUARD",
]

EULER_GAMMA = 0.57721566490153286061
_EPS = float(np.finfo(float).eps)
_FPMIN = 1e-300
_MAXIT = 10_000

SERIES_CUTOFF = 40.0
OVERFLOW_GUARD = 700.0


class SpecFunResult(NamedTuple):
    value: float
    est_abs_error: float


class RangeError(DomainError):
    """Argument would overflow double precision."""


class SingularityError(DomainError):
    """Argument sits on a logarithmic singularity."""


def _expn_cf(n, x):
    # modified Lentz for E_n(x) e^x, x > 1
    b = x + n
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (n - 1 + i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            return h, (i + 4) * _EPS * abs(h)
    raise ArithmeticError(f"continued fraction for E_{n}({x}) did not converge")


def _expn_series(n, x):
    nm1 = n - 1
    if nm1 != 0:
        ans = 1.0 / nm1
    else:
        ans = -math.log(x) - EULER_GAMMA
    fact = 1.0
    big = abs(ans)
    for i in range(1, _MAXIT):
        fact *= -x / i
        if i != nm1:
            delta = -fact / (i - nm1)
        else:
            psi = -EULER_GAMMA + sum(1.0 / k for k in range(1, nm1 + 1))
            delta = fact * (-math.log(x) + psi)
        ans += delta
        big = max(big, abs(delta))
        if abs(delta) <= abs(ans) * _EPS:
            return ans, abs(delta) + (i + 2) * _EPS * big
    raise ArithmeticError(f"series for E_{n}({x}) did not converge")


def expn(n: int, x: float) -> SpecFunResult:
    """Generalized exponential integral E_n(x) = int_1^inf e^{-x t} t^{-n} dt, x > 0."""
    x = float(x)
    if n < 0 or not x > 0:
        raise DomainError(f"expn needs n >= 0 and x > 0, got n={n}, x={x!r}")
    if n == 0:
        v = math.exp(-x) / x
        return SpecFunResult(v, 2 * _EPS * v)
    if x > 1.0:
        h, err = _expn_cf(n, x)
        scale = math.exp(-x)
        return SpecFunResult(h * scale, err * scale + _EPS * h * scale)
    return SpecFunResult(*_expn_series(n, x))


def e1(x: float) -> SpecFunResult:
    return expn(1, x)


def expn_scaled(n: int, x: float) -> float:
    """``e^x E_n(x)`` for ``x > 0``, finite for arguments where ``E_n`` underflows."""
    x = float(x)
    if n < 1 or not x > 0:
        raise DomainError(f"expn_scaled needs n >= 1 and x > 0, got n={n}, x={x!r}")
    if x > 1.0:
        return _expn_cf(n, x)[0]
    return _expn_series(n, x)[0] * math.exp(x)


def _ei_pos_series(x):
    term = 1.0
    total = 0.0
    for k in range(1, _MAXIT):
        term *= x / k
        contrib = term / k
        total += contrib
        if contrib <= _EPS * total:
            break
    head = EULER_GAMMA + math.log(x)
    value = head + total
    # the positive terms do not cancel; rounding grows with the term count
    err = (k + 2) * _EPS * (abs(total) + abs(head))
    return value, err


def _ei_pos_asymptotic(x):
    term = 1.0
    total = 1.0
    for k in range(1, 200):
        new = term * k / x
        if new > term or new < _EPS * total:
            break
        term = new
        total += term
    scale = math.exp(x) / x
    value = scale * total
    return value, scale * (term + (k + 2) * _EPS * total)


def _ei_pos(x):
    if x <= SERIES_CUTOFF:
        return _ei_pos_series(x)
    return _ei_pos_asymptotic(x)


def ei(x: float) -> SpecFunResult:
    """Principal-value exponential integral Ei(x).

    For ``x < 0`` this is ``-E_1(-x)``.
    """
    x = float(x)
    if x == 0.0:
        raise SingularityError("Ei has a logarithmic singularity at x = 0")
    if x > 709.0:
        raise RangeError(f"Ei({x!r}) overflows")
    if x < 0.0:
        v, err = expn(1, -x)
        return SpecFunResult(-v, err)
    return SpecFunResult(*_ei_pos(x))


def _odd_even_series(x, start):
    # sum_{k} x^m / (m * m!) over m = start, start + 2, ...
    x2 = x * x
    term = 1.0
    for m in range(1, start + 1):
        term *= x / m
    total = term / start
    m = start
    while True:
        term *= x2 / ((m + 1) * (m + 2))
        m += 2
        contrib = term / m
        total += contrib
        if abs(contrib) <= _EPS * abs(total):  # <= so an underflowed term also stops
            break
    return total, (m + 2) * _EPS * abs(total)


def shi(x: float) -> SpecFunResult:
    """Hyperbolic sine integral Shi(x) = int_0^x sinh(t)/t dt (odd)."""
    x = float(x)
    ax = abs(x)
    if ax > OVERFLOW_GUARD:
        raise RangeError(f"|x|={ax!r} exceeds the overflow guard {OVERFLOW_GUARD}")
    if ax == 0.0:
        return SpecFunResult(0.0, 0.0)
    if ax <= SERIES_CUTOFF:
        v, err = _odd_even_series(ax, 1)
    else:
        ep, ep_err = _ei_pos_asymptotic(ax)
        em, em_err = expn(1, ax)
        v = 0.5 * (ep + em)
        err = 0.5 * (ep_err + em_err)
    return SpecFunResult(math.copysign(v, x), err)


def chin(x: float) -> SpecFunResult:
    """Entire hyperbolic cosine integral int_0^x (cosh t - 1)/t dt (even)."""
    x = float(x)
    ax = abs(x)
    if ax > OVERFLOW_GUARD:
        raise RangeError(f"|x|={ax!r} exceeds the overflow guard {OVERFLOW_GUARD}")
    if ax == 0.0:
        return SpecFunResult(0.0, 0.0)
    if ax <= SERIES_CUTOFF:
        return SpecFunResult(*_odd_even_series(ax, 2))
    ep, ep_err = _ei_pos_asymptotic(ax)
    em, em_err = expn(1, ax)
    v = 0.5 * (ep - em) - EULER_GAMMA - math.log(ax)
    return SpecFunResult(v, 0.5 * (ep_err + em_err) + 4 * _EPS * abs(v))


def ei_tail(r: float, nu: float) -> SpecFunResult:
    """Tail integral int_r^inf Ei(-2 nu t) dt.

    Closed form ``-[r Ei(-2 nu r) + exp(-2 nu r)/(2 nu)]``, evaluated without
    cancellation as ``-E_2(2 nu r)/(2 nu)``.
    """
    r = float(r)
    nu = float(nu)
    if not (r > 0 and nu > 0):
        raise DomainError(f"ei_tail needs r > 0 and nu > 0, got r={r!r}, nu={nu!r}")
    v, err = expn(2, 2.0 * nu * r)
    return SpecFunResult(-v / (2.0 * nu), err / (2.0 * nu))


def ei_integral_representation(x: float) -> float:
    """Ei(-x) for x > 0 through the integral -e^{-x} int_1^inf dt / (t^2 (x + ln t)).

    Adaptive quadrature, used as an independent check of :func:`ei`.
    """
    from scipy import integrate

    if not x > 0:
        raise DomainError(f"representation holds for x > 0, got {x!r}")
    # t = e^u maps the integral onto int_0^inf e^{-u} / (x + u) du
    val, _ = integrate.quad(lambda u: math.exp(-u) / (x + u), 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return -math.exp(-x) * val


def _values(fn):
    def wrapped(x):
        arr = np.asarray(x, dtype=float)
        out = np.fromiter((fn(v).value for v in arr.ravel()), dtype=float, count=arr.size)
        out = out.reshape(arr.shape)
        return out if out.ndim else float(out)

    wrapped.__name__ = fn.__name__ + "_values"
    wrapped.__doc__ = f"Array version of :func:`{fn.__name__}` returning values only."
    return wrapped


ei_values = _values(ei)
shi_values = _values(shi)
chin_values = _values(chin)
