"""Deterministic quadrature on the sphere, intervals, ellipsoids and flat ellipses.

Sphere rules are products of a polar rule and a uniform azimuthal rule about
a chosen axis. Every rule is antipodally symmetric: the node set is closed
under ``w -> -w`` with equal weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .shapes import BALL_VOLUME, Shape, gauge_fixed_eigh

FOUR_PI = 4.0 * np.pi
GRADED_TRIGGER = 1e-2
DEFAULT_GRADING = 6


class IntervalRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray


class PointRule(NamedTuple):
    """Nodes in R^3 with weights (volume or probability measure)."""

    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class SphereQuadrature:
    """Node/weight rule on the unit sphere.

    ``exactness_degree`` is the largest polynomial degree integrated exactly;
    graded rules are spectrally accurate but not polynomial-exact and report 0.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    n_polar: int
    n_azimuth: int
    axis: np.ndarray
    grading: int = 0

    @property
    def size(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        return integrate_sphere(values, self)


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> IntervalRule:
    """Gauss-Legendre rule on ``[a, b]``, exact for polynomials of degree ``2n-1``."""
    if n < 1:
        raise ValueError("need at least one node")
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return IntervalRule(half * x + 0.5 * (a + b), half * w)


def axis_frame(axis) -> np.ndarray:
    """Orthonormal columns ``(t1, t2, axis)`` with a deterministic choice of t1."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    if axis[0] == 0.0 and axis[1] == 0.0:
        return np.column_stack([[1.0, 0.0, 0.0], [0.0, np.sign(axis[2]), 0.0], [0.0, 0.0, np.sign(axis[2])]])
    helper = np.eye(3)[int(np.argmin(np.abs(axis)))]
    t1 = helper - (helper @ axis) * axis
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(axis, t1)
    return np.column_stack([t1, t2, axis])


def _azimuth(n_azimuth: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth


def _assemble(cos_polar, sin_polar, w_polar, n_azimuth, frame):
    phi = _azimuth(n_azimuth)
    ct = np.repeat(cos_polar, n_azimuth)
    st = np.repeat(sin_polar, n_azimuth)
    ph = np.tile(phi, len(cos_polar))
    local = np.column_stack([st * np.cos(ph), st * np.sin(ph), ct])
    weights = np.repeat(w_polar, n_azimuth) * (2.0 * np.pi / n_azimuth)
    return local @ frame.T, weights


def build_sphere_rule(n_polar: int, n_azimuth: int, axis=(0.0, 0.0, 1.0)) -> SphereQuadrature:
    """Gauss-Legendre in ``cos(polar)`` times the trapezoid rule in azimuth.

    Exact for spherical polynomials up to degree ``min(2 n_polar - 1, n_azimuth - 1)``.
    """
    if n_polar < 4 or n_azimuth < 8 or n_azimuth % 2:
        raise ValueError("need n_polar >= 4 and an even n_azimuth >= 8")
    z, wz = gauss_legendre(n_polar)
    frame = axis_frame(axis)
    nodes, weights = _assemble(z, np.sqrt(1.0 - z**2), wz, n_azimuth, frame)
    return SphereQuadrature(
        nodes, weights, min(2 * n_polar - 1, n_azimuth - 1), n_polar, n_azimuth, frame[:, 2].copy()
    )


def build_graded_sphere_rule(axis, grading: int, base: SphereQuadrature) -> SphereQuadrature:
    """Sphere rule with polar nodes clustered toward ``±axis``.

    Each hemisphere uses ``base.n_polar`` Gauss-Legendre nodes in ``s`` with
    polar angle ``(pi/2) s**grading``; the southern hemisphere is the antipodal
    image of the northern one. ``grading=1`` is plain Gauss-Legendre in angle,
    which already absorbs the ``1/sin`` factor of flat-support integrands.
    """
    if grading < 1:
        raise ValueError("grading must be >= 1")
    s, ws = gauss_legendre(base.n_polar, 0.0, 1.0)
    psi = 0.5 * np.pi * s**grading
    dpsi = 0.5 * np.pi * grading * s ** (grading - 1)
    w_polar = ws * dpsi * np.sin(psi)
    frame = axis_frame(axis)
    north, w = _assemble(np.cos(psi), np.sin(psi), w_polar, base.n_azimuth, frame)
    nodes = np.concatenate([north, -north])
    weights = np.concatenate([w, w])
    return SphereQuadrature(nodes, weights, 0, base.n_polar, base.n_azimuth, frame[:, 2].copy(), grading)


@lru_cache(maxsize=8)
def _cached_plain(n_polar: int, n_azimuth: int) -> SphereQuadrature:
    return build_sphere_rule(n_polar, n_azimuth)


@lru_cache(maxsize=64)
def _cached_graded(axis: tuple, grading: int, n_polar: int, n_azimuth: int) -> SphereQuadrature:
    return build_graded_sphere_rule(np.array(axis), grading, _cached_plain(n_polar, n_azimuth))


def adapted_sphere_rule(
    M=None,
    n_polar: int = 64,
    n_azimuth: int = 128,
    trigger: float = GRADED_TRIGGER,
    grading: int = DEFAULT_GRADING,
) -> SphereQuadrature:
    """Plain product rule, or a graded one about the softest direction of ``M``.

    The graded rule is used when ``lambda_min / lambda_max < trigger``; its
    axis is the eigenvector of the smallest eigenvalue. Rules are cached.
    """
    if M is not None:
        lam, R = gauge_fixed_eigh(M)
        if lam[-1] < trigger * lam[0]:
            return _cached_graded(tuple(float(v) for v in R[:, 2]), grading, n_polar, n_azimuth)
    return _cached_plain(n_polar, n_azimuth)


def rule_key(rule: SphereQuadrature) -> tuple:
    return (rule.n_polar, rule.n_azimuth, rule.grading, tuple(float(v) for v in rule.axis), rule.size)


def integrate_sphere(f, rule: SphereQuadrature) -> float:
    """``sum_q w_q f(w_q)``; ``f`` is a callable on (N, 3) nodes or precomputed values."""
    values = f(rule.nodes) if callable(f) else np.asarray(f, dtype=float)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(
            "non-finite integrand at a quadrature node; use a graded rule for this configuration"
        )
    return float(values @ rule.weights)


def ellipsoid_volume_rule(shape: Shape, n_radial: int, sphere_rule: SphereQuadrature) -> PointRule:
    """Rule for ``int_E F dx``: Gauss-Legendre in radius with weight ``r^2``
    times a sphere rule, mapped through ``x = R D(a) y``. Weights sum to ``|E|``.
    """
    if shape.is_degenerate:
        raise ValueError("degenerate shape; use ellipse_area_rule")
    r, wr = gauss_legendre(n_radial, 0.0, 1.0)
    y = (r[:, None, None] * sphere_rule.nodes[None, :, :]).reshape(-1, 3)
    w = (wr * r**2)[:, None] * sphere_rule.weights[None, :]
    jac = float(np.prod(shape.semiaxes))
    return PointRule(shape.from_unit_ball(y), w.ravel() * jac)


def ellipse_area_rule(a1: float, a2: float, R, n: int) -> PointRule:
    """Rule integrating against the semi-ellipsoid law on a flat ellipse.

    Density ``3/(2 pi a1 a2) sqrt(1 - x1^2/a1^2 - x2^2/a2^2)`` in the plane
    spanned by the first two columns of ``R``. With ``rho = sqrt(1 - tau^2)`` the
    radial weight becomes ``tau^2 dtau``, so even polynomials integrate exactly.
    Weights sum to 1.
    """
    if a1 <= 0 or a2 <= 0:
        raise ValueError("semi-axes of the ellipse must be positive")
    R = np.asarray(R, dtype=float)
    tau, wt = gauss_legendre(n, 0.0, 1.0)
    rho = np.sqrt(1.0 - tau**2)
    n_az = 4 * n
    phi = _azimuth(n_az) + np.pi / n_az
    c, s = np.cos(phi), np.sin(phi)
    local = np.zeros((n, n_az, 3))
    local[..., 0] = a1 * rho[:, None] * c[None, :]
    local[..., 1] = a2 * rho[:, None] * s[None, :]
    w = (3.0 / (2.0 * np.pi)) * (wt * tau**2)[:, None] * np.full(n_az, 2.0 * np.pi / n_az)[None, :]
    return PointRule(local.reshape(-1, 3) @ R.T, w.ravel())


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform, antipodally symmetric point set of size ``2 n``."""
    i = np.arange(n) + 0.5
    z = i / n  # upper hemisphere only
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * np.arange(n)
    r = np.sqrt(1.0 - z**2)
    half = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.concatenate([half, -half])


def refine(rule_fn: Callable[[int], float], n: int) -> tuple[float, float]:
    """Evaluate at ``n`` and ``2 n``; return the finer value and the difference."""
    coarse, fine = rule_fn(n), rule_fn(2 * n)
    return fine, abs(fine - coarse)


__all__ = [
    "FOUR_PI",
    "GRADED_TRIGGER",
    "adapted_sphere_rule",
    "rule_key",
    "BALL_VOLUME",
    "IntervalRule",
    "PointRule",
    "SphereQuadrature",
    "axis_frame",
    "build_graded_sphere_rule",
    "build_sphere_rule",
    "ellipse_area_rule",
    "ellipsoid_volume_rule",
    "fibonacci_sphere",
    "gauss_legendre",
    "integrate_sphere",
    "refine",
]
