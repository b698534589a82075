"""Gauged Q-balls in a piecewise-quadratic potential.

Numerical profiles, thin-wall and weak-coupling analytic branches, and the
special functions they need.
"""

from .model import DomainError, ModelParams, NoBoundStateError, omega_min, potential
from .numeric import ConvergenceError, RadialProfile, charge, energy, solve_selfconsistent
from .thinwall import NoSolutionError

__all__ = [
    "ConvergenceError",
    "DomainError",
    "ModelParams",
    "NoBoundStateError",
    "NoSolutionError",
    "RadialProfile",
    "charge",
    "energy",
    "omega_min",
    "potential",
    "solve_selfconsistent",
]
