"""Model parameters and the piecewise parabolic potential.

The scalar potential is

    U(f) = 1/2 [f^2 + eps (1 - f) - eps |1 - f|]

i.e. ``f^2/2`` below the kink at ``f = 1`` and ``[(f - eps)^2 + eps (2 - eps)]/2``
above it.  For ``1 < eps < 2`` the global minimum sits at ``f = 0`` and a local
minimum at ``f = eps``; ``eps = 2`` makes the two minima degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "DomainError",
    "NoBoundStateError",
    "ModelParams",
    "PotentialValue",
    "potential",
    "potential_u",
    "potential_du",
    "nu",
    "omega_min",
]


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class NoBoundStateError(DomainError):
    """No localized (decaying) solution exists for the requested frequency."""


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of a gauged Q-ball.

    Exactly one of ``omega`` and ``q`` is the independent input of a
    self-consistent solve; the other is left as ``None``.
    """

    e: float
    epsilon: float
    omega: Optional[float] = None
    q: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.e) or self.e < 0:
            raise DomainError(f"gauge coupling must be >= 0, got e={self.e!r}")
        if not (1.0 < self.epsilon <= 2.0):
            raise DomainError(f"epsilon must satisfy 1 < epsilon <= 2, got {self.epsilon!r}")
        if (self.omega is None) == (self.q is None):
            raise DomainError("exactly one of omega and q must be given")
        if self.omega is not None:
            if self.omega >= 1.0:
                raise NoBoundStateError(f"omega={self.omega!r} >= 1 admits no bound state")
            if self.omega <= 0.0:
                raise DomainError(f"omega must be positive, got {self.omega!r}")
        if self.q is not None and not self.q > 0:
            raise DomainError(f"charge must be positive, got q={self.q!r}")

    @property
    def mode(self) -> str:
        return "omega" if self.omega is not None else "q"


@dataclass(frozen=True)
class PotentialValue:
    u: float
    du: float
    branch: str  # "inner" (f < 1), "kink" (f == 1) or "outer" (f > 1)


def _check_epsilon(epsilon):
    if not (1.0 < epsilon <= 2.0):
        raise DomainError(f"epsilon must satisfy 1 < epsilon <= 2, got {epsilon!r}")


def potential_u(f, epsilon):
    """Vectorized U(f); no branch bookkeeping."""
    f = np.asarray(f, dtype=float)
    outer = 0.5 * ((f - epsilon) ** 2 + epsilon * (2.0 - epsilon))
    return np.where(f <= 1.0, 0.5 * f * f, outer)


def potential_du(f, epsilon):
    """Vectorized dU/df, using the inner-branch value at the kink."""
    f = np.asarray(f, dtype=float)
    return np.where(f <= 1.0, f, f - epsilon)


def potential(f: float, epsilon: float) -> PotentialValue:
    """Evaluate the potential, its derivative and the branch at field magnitude ``f``.

    At the kink ``f = 1`` the derivative is reported with the inner-branch
    value ``1``; the field equations are matched across the kink explicitly
    and never evaluate it there.
    """
    _check_epsilon(epsilon)
    f = float(f)
    if not f >= 0.0:
        raise DomainError(f"field magnitude must be >= 0, got {f!r}")
    if f < 1.0:
        return PotentialValue(0.5 * f * f, f, "inner")
    if f == 1.0:
        return PotentialValue(0.5, 1.0, "kink")
    return PotentialValue(0.5 * ((f - epsilon) ** 2 + epsilon * (2.0 - epsilon)), f - epsilon, "outer")


def nu(omega: float) -> float:
    """Exterior decay rate sqrt(1 - omega^2) of the scalar field."""
    omega = float(omega)
    if omega >= 1.0:
        raise NoBoundStateError(f"omega={omega!r} >= 1 admits no bound state")
    if omega < 0.0:
        raise DomainError(f"omega must be non-negative, got {omega!r}")
    return float(np.sqrt((1.0 - omega) * (1.0 + omega)))


def omega_min(epsilon: float) -> float:
    """Lower edge sqrt(1 - eps/2) of the ungauged frequency window.

    This is the minimum of sqrt(2U/f^2), attained at f = 2.
    """
    _check_epsilon(epsilon)
    return float(np.sqrt(1.0 - 0.5 * epsilon))
