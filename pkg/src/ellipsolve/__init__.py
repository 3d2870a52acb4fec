"""Minimisers of anisotropic Coulomb-type interaction energies with quadratic confinement.

The kernel is ``W(x) = Psi(x/|x|) / |x|`` with an even profile ``Psi`` on the
unit sphere. Minimisers are uniform laws on ellipsoids, or semi-ellipsoid
laws on flat ellipses when the transformed profile vanishes somewhere.
"""

__version__ = "0.1.0"

from .energy import CandidateMeasure, MeasureKind, convexity_gap, divergence_check, energy
from .equilibrium import (
    Classification,
    SolverConfig,
    SolveResult,
    continuation_solve,
    el_residual,
    f_value,
    p_quadratic,
    p_quartic,
    solve_equilibrium,
)
from .exceptions import (
    ConvergenceError,
    DegenerateShapeError,
    EllipsolveError,
    HypothesisError,
    InconclusiveTrace,
    TheoryViolation,
)
from .harmonics import HarmonicExpansion, Profile, fourier_multiplier, positivity_scan, project_polynomial
from .potential import potential, potential_gradient, verify_euler_lagrange
from .quadrature import SphereQuadrature, build_sphere_rule, integrate_sphere
from .shapes import Shape

__all__ = [
    "CandidateMeasure",
    "Classification",
    "ConvergenceError",
    "DegenerateShapeError",
    "EllipsolveError",
    "HarmonicExpansion",
    "HypothesisError",
    "InconclusiveTrace",
    "MeasureKind",
    "Profile",
    "Shape",
    "SolveResult",
    "SolverConfig",
    "SphereQuadrature",
    "TheoryViolation",
    "build_sphere_rule",
    "continuation_solve",
    "convexity_gap",
    "divergence_check",
    "el_residual",
    "energy",
    "f_value",
    "fourier_multiplier",
    "integrate_sphere",
    "p_quadratic",
    "p_quartic",
    "positivity_scan",
    "potential",
    "potential_gradient",
    "project_polynomial",
    "solve_equilibrium",
    "verify_euler_lagrange",
]
