"""Energies ``I(mu) = int (W * mu) dmu + int |x|^2 dmu`` of candidate laws."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .equilibrium import KAPPA
from .harmonics import Profile
from .potential import interior_coefficients, potential
from .quadrature import (
    adapted_sphere_rule,
    build_sphere_rule,
    ellipse_area_rule,
    ellipsoid_volume_rule,
    gauss_legendre,
)
from .shapes import Shape


class MeasureKind(str, enum.Enum):
    ELLIPSOID = "EllipsoidLaw"
    SEMI_ELLIPSOID = "SemiEllipsoidLaw"
    SEGMENT = "SegmentLaw"


@dataclass(frozen=True)
class CandidateMeasure:
    """Ellipsoid law, semi-ellipsoid law on a flat ellipse, or segment law.

    ``semiaxes`` has one, two or three entries according to ``kind``; the
    support lies along the leading columns of ``rotation``.
    """

    kind: MeasureKind
    semiaxes: tuple
    rotation: np.ndarray

    def __post_init__(self):
        kind = MeasureKind(self.kind)
        object.__setattr__(self, "kind", kind)
        n = {MeasureKind.ELLIPSOID: 3, MeasureKind.SEMI_ELLIPSOID: 2, MeasureKind.SEGMENT: 1}[kind]
        a = tuple(float(v) for v in self.semiaxes)
        if len(a) != n or min(a) <= 0:
            raise ValueError(f"{kind.value} needs {n} positive semi-axes, got {a}")
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-12:
            raise ValueError("rotation is not orthogonal")
        object.__setattr__(self, "semiaxes", a)
        object.__setattr__(self, "rotation", R)

    @classmethod
    def ellipsoid(cls, shape: Shape) -> CandidateMeasure:
        if shape.is_degenerate:
            return cls(MeasureKind.SEMI_ELLIPSOID, tuple(shape.semiaxes[:2]), shape.rotation)
        return cls(MeasureKind.ELLIPSOID, tuple(shape.semiaxes), shape.rotation)

    @classmethod
    def semi_ellipsoid(cls, a1: float, a2: float, R=None) -> CandidateMeasure:
        return cls(MeasureKind.SEMI_ELLIPSOID, (a1, a2), np.eye(3) if R is None else R)

    @classmethod
    def segment(cls, a1: float, R=None) -> CandidateMeasure:
        return cls(MeasureKind.SEGMENT, (a1,), np.eye(3) if R is None else R)

    @property
    def shape(self) -> Shape:
        if self.kind is MeasureKind.SEGMENT:
            raise ValueError("segment laws have no admissible shape")
        a = self.semiaxes if self.kind is MeasureKind.ELLIPSOID else self.semiaxes + (0.0,)
        return Shape(np.array(a), self.rotation)

    def rule(self, n: int):
        """Probability-weighted nodes at resolution ``n``."""
        if self.kind is MeasureKind.ELLIPSOID:
            shape = self.shape
            r = ellipsoid_volume_rule(shape, n, build_sphere_rule(n, 2 * n))
            return r.nodes, r.weights / shape.volume
        if self.kind is MeasureKind.SEMI_ELLIPSOID:
            r = ellipse_area_rule(*self.semiaxes, self.rotation, n)
            return r.nodes, r.weights
        a1 = self.semiaxes[0]
        s, w = gauss_legendre(n, -a1, a1)
        dens = 0.75 / a1 * (1.0 - (s / a1) ** 2)
        return np.outer(s, self.rotation[:, 0]), w * dens

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "semiaxes": list(self.semiaxes),
            "rotation": [[float(v) for v in row] for row in self.rotation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> CandidateMeasure:
        return cls(MeasureKind(d["kind"]), tuple(d["semiaxes"]), np.asarray(d.get("rotation", np.eye(3))))


def mass(mu: CandidateMeasure, n: int = 16) -> float:
    return float(np.sum(mu.rule(n)[1]))


class EnergyResult(NamedTuple):
    value: float
    error: float
    interaction: float
    confinement: float


def _energy_once(profile: Profile, mu: CandidateMeasure, n: int) -> tuple[float, float]:
    shape = mu.shape
    if shape.is_degenerate:
        sphere = build_sphere_rule(2 * n, 4 * n)  # sets the face-rule resolution
        J0, J2 = interior_coefficients(profile, shape, sphere)
        nodes, w = mu.rule(n)
        x2 = nodes @ shape.rotation[:, :2]
    else:
        sphere = adapted_sphere_rule(shape.matrix, 2 * n, 4 * n)
        J0, J2 = interior_coefficients(profile, shape, sphere)
        nodes, w = mu.rule(n)
        x2 = nodes
    pot = 0.5 * KAPPA * (J0 - np.einsum("ni,ij,nj->n", x2, J2, x2))
    return float(w @ pot), float(w @ np.sum(nodes**2, axis=1))


def energy(profile: Profile, mu: CandidateMeasure, resolution: int = 32) -> EnergyResult:
    """Energy of an ellipsoid or semi-ellipsoid law.

    The interaction uses the closed interior potential of the support, which
    is quadratic on it; the outer integral uses the law's own quadrature.
    ``error`` is the change from resolution ``n/2`` to ``n``.
    """
    if mu.kind is MeasureKind.SEGMENT:
        raise ValueError("segment laws have infinite energy; use divergence_check")
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    ci, cc = _energy_once(profile, mu, resolution // 2)
    fi, fc = _energy_once(profile, mu, resolution)
    return EnergyResult(fi + fc, abs((fi + fc) - (ci + cc)), fi, fc)


def _segment_energy(profile: Profile, mu: CandidateMeasure, n: int) -> float:
    """Midpoint double sum on ``n`` cells, dropping the singular diagonal."""
    a1 = mu.semiaxes[0]
    h = 2.0 * a1 / n
    s = -a1 + h * (np.arange(n) + 0.5)
    rho = 0.75 / a1 * (1.0 - (s / a1) ** 2) * h
    k = np.arange(-(n - 1), n)
    kernel = np.zeros(len(k))
    kernel[k != 0] = 1.0 / (h * np.abs(k[k != 0]))
    psi_axis = float(profile.psi.evaluate(mu.rotation[:, 0]))
    inter = psi_axis * float(rho @ np.convolve(rho, kernel)[n - 1 : 2 * n - 1])
    return inter + float(rho @ s**2)


class DivergenceResult(NamedTuple):
    resolutions: list
    values: list
    increments: list
    divergent: bool
    plateau: bool


def divergence_check(mu: CandidateMeasure, levels: int = 6, profile: Profile | None = None,
                     n0: int | None = None, plateau_tol: float = 1e-6) -> DivergenceResult:
    """Energy estimates at doubling resolutions ``n0 * 2**k``.

    Segment laws use a direct double sum (default ``n0 = 16`` cells), which
    grows like ``log n`` when the energy is infinite. Other laws use the
    regular energy path (default ``n0 = 4``) and should plateau.
    """
    if levels < 3:
        raise ValueError("levels must be >= 3")
    profile = profile or Profile.coulomb()
    segment = mu.kind is MeasureKind.SEGMENT
    n0 = n0 or (16 if segment else 4)
    ns = [n0 * 2**k for k in range(levels)]
    if segment:
        vals = [_segment_energy(profile, mu, n) for n in ns]
    else:
        vals = [sum(_energy_once(profile, mu, n)) for n in ns]
    inc = list(np.diff(vals))
    increasing = all(d > 0 for d in inc)
    sustained = all(inc[i + 1] >= 0.5 * inc[i] for i in range(len(inc) - 1))
    return DivergenceResult(ns, [float(v) for v in vals], [float(d) for d in inc],
                            bool(increasing and sustained), bool(abs(inc[-1]) <= plateau_tol))


def cross_interaction(profile: Profile, mu1: CandidateMeasure, mu2: CandidateMeasure, resolution: int = 16) -> float:
    """``int (W * mu1) dmu2``, with the potential of ``mu1`` sampled on ``mu2``'s rule."""
    nodes, w = mu2.rule(resolution)
    shape1 = mu1.shape
    if shape1.is_degenerate and not mu2.shape.is_degenerate:
        raise ValueError("flat potentials are only available in their plane")
    if shape1.is_degenerate:
        return float(w @ potential(profile, shape1, nodes))
    inside = np.linalg.norm(shape1.to_unit_ball(nodes), axis=1) < 1.0
    J0, J2 = interior_coefficients(profile, shape1, adapted_sphere_rule(shape1.matrix))
    vals = np.empty(len(nodes))
    xi = nodes[inside]
    vals[inside] = 0.5 * KAPPA * (J0 - np.einsum("ni,ij,nj->n", xi, J2, xi))
    if np.any(~inside):
        vals[~inside] = potential(profile, shape1, nodes[~inside])
    return float(w @ vals)


def _same(mu1: CandidateMeasure, mu2: CandidateMeasure) -> bool:
    return (mu1.kind is mu2.kind and mu1.semiaxes == mu2.semiaxes
            and np.array_equal(mu1.rotation, mu2.rotation))


def convexity_gap(profile: Profile, mu1: CandidateMeasure, mu2: CandidateMeasure, resolution: int = 16) -> float:
    """``I((mu1 + mu2)/2) - (I(mu1) + I(mu2))/2``; nonpositive when ``Psi_hat >= 0``.

    The confinement term is linear and cancels, leaving
    ``X/2 - (I11 + I22)/4`` in terms of interaction energies.
    """
    I11 = energy(profile, mu1, 2 * resolution).interaction
    I22 = energy(profile, mu2, 2 * resolution).interaction
    if _same(mu1, mu2):
        X = I11
    else:
        X = 0.5 * (cross_interaction(profile, mu1, mu2, resolution)
                   + cross_interaction(profile, mu2, mu1, resolution))
    return 0.5 * X - 0.25 * (I11 + I22)


__all__ = [
    "CandidateMeasure",
    "DivergenceResult",
    "EnergyResult",
    "MeasureKind",
    "convexity_gap",
    "cross_interaction",
    "divergence_check",
    "energy",
    "mass",
]
