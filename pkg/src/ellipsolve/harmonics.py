"""Even profiles on the sphere in a real orthonormal spherical-harmonic basis.

The kernel ``W(x) = Psi(x/|x|)/|x|`` has Fourier transform
``Psi_hat(xi/|xi|)/|xi|^2``; on each degree-2k harmonic block the map
``Psi -> Psi_hat`` is multiplication by a scalar ``b_{2k}``.

Basis convention: ``Y_k^0 = N_k^0 P_k^0(cos t)``,
``Y_k^m = sqrt(2) N_k^m P_k^m(cos t) cos(m p)`` for ``m > 0`` and
``sqrt(2) N_k^|m| P_k^|m|(cos t) sin(|m| p)`` for ``m < 0``, with associated
Legendre functions taken without the Condon-Shortley phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import minimize

from .quadrature import build_sphere_rule, fibonacci_sphere, rule_key

TOL_POS = 1e-10
DEFAULT_MAX_DEGREE = 8


def _as_points(omega) -> tuple[np.ndarray, bool]:
    pts = np.asarray(omega, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 3:
        raise ValueError("points must have three components")
    return pts, single


def _harmonic_stream(lmax: int, pts: np.ndarray, degrees, orders=None):
    """Yield ``(k, m, values)`` for the real basis at the requested degrees.

    Uses ``sin(t)^m (cos mp, sin mp) = Re, Im (x + i y)^m`` on the unit sphere
    together with the three-term recurrence of the fully normalised associated
    Legendre functions, so no angles are formed and memory stays O(N).
    ``orders`` optionally restricts the nonnegative orders visited.
    """
    wanted = set(degrees)
    r = np.linalg.norm(pts, axis=1)
    x, y, z = pts[:, 0] / r, pts[:, 1] / r, pts[:, 2] / r
    pmm = 1.0 / math.sqrt(4.0 * math.pi)
    cm, sm = np.ones(len(pts)), np.zeros(len(pts))
    for m in range(lmax + 1):
        if m > 0:
            pmm *= math.sqrt((2 * m + 1) / (2 * m))
            cm, sm = cm * x - sm * y, sm * x + cm * y
        if orders is not None and m not in orders:
            continue
        prev2, prev = None, None
        for l in range(m, lmax + 1):
            if l == m:
                p = np.full(len(pts), pmm)
            elif l == m + 1:
                p = math.sqrt(2 * m + 3) * z * prev
            else:
                a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
                b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
                p = a * (z * prev - b * prev2)
            if l in wanted:
                if m == 0:
                    yield l, 0, p
                else:
                    yield l, m, math.sqrt(2.0) * p * cm
                    yield l, -m, math.sqrt(2.0) * p * sm
            prev2, prev = prev, p


def _harmonic_table(lmax: int, pts: np.ndarray, degrees: Iterable[int]) -> dict[int, np.ndarray]:
    """Real basis values for the requested degrees, each block (2k+1, N)."""
    degrees = list(degrees)
    out = {k: np.empty((2 * k + 1, len(pts))) for k in degrees}
    for k, m, vals in _harmonic_stream(lmax, pts, degrees):
        out[k][k + m] = vals
    return out


def real_harmonic_eval(degree: int, order: int, omega) -> np.ndarray | float:
    """Value of the orthonormal real spherical harmonic ``(degree, order)``.

    Parameters
    ----------
    degree : int
        Harmonic degree ``k >= 0``.
    order : int
        ``-k <= order <= k``.
    omega : array_like, (3,) or (N, 3)
        Unit vectors.
    """
    if degree < 0 or abs(order) > degree:
        raise ValueError(f"order {order} out of range for degree {degree}")
    pts, single = _as_points(omega)
    if np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) > 1e-12:
        raise ValueError("evaluation points must be unit vectors")
    vals = _harmonic_table(degree, pts, [degree])[degree][degree + order]
    return float(vals[0]) if single else vals


def even_degrees(max_degree: int) -> list[int]:
    return list(range(0, max_degree + 1, 2))


@dataclass(frozen=True, eq=False)
class HarmonicExpansion:
    """Coefficient table of an even function on the sphere.

    ``blocks[k]`` holds the ``2k+1`` coefficients of degree ``k`` ordered by
    ``m = -k, ..., k``. Only even degrees are stored.
    """

    max_degree: int
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_degree < 0 or self.max_degree % 2:
            raise ValueError("max_degree must be an even integer >= 0")
        blocks = {}
        for k in even_degrees(self.max_degree):
            b = np.asarray(self.blocks.get(k, np.zeros(2 * k + 1)), dtype=float).copy()
            if b.shape != (2 * k + 1,):
                raise ValueError(f"degree {k} block must have length {2 * k + 1}")
            b.setflags(write=False)
            blocks[k] = b
        extra = set(self.blocks) - set(blocks)
        if extra:
            raise ValueError(f"only even degrees <= max_degree allowed, got {sorted(extra)}")
        object.__setattr__(self, "blocks", blocks)

    def __eq__(self, other):
        if not isinstance(other, HarmonicExpansion):
            return NotImplemented
        return self.max_degree == other.max_degree and np.array_equal(self.flat, other.flat)

    __hash__ = None

    @classmethod
    def zeros(cls, max_degree: int = DEFAULT_MAX_DEGREE) -> HarmonicExpansion:
        return cls(max_degree, {})

    @classmethod
    def constant(cls, value: float, max_degree: int = DEFAULT_MAX_DEGREE) -> HarmonicExpansion:
        return cls(max_degree, {0: [value * math.sqrt(4.0 * math.pi)]})

    @classmethod
    def from_flat(cls, max_degree: int, coeffs) -> HarmonicExpansion:
        coeffs = np.asarray(coeffs, dtype=float)
        blocks, i = {}, 0
        for k in even_degrees(max_degree):
            blocks[k] = coeffs[i : i + 2 * k + 1]
            i += 2 * k + 1
        if i != len(coeffs):
            raise ValueError("coefficient vector has the wrong length")
        return cls(max_degree, blocks)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.blocks[k] for k in even_degrees(self.max_degree)])

    def basis(self, points) -> np.ndarray:
        """Basis matrix, shape (N, n_coeffs), matching :attr:`flat`."""
        pts, _ = _as_points(points)
        table = _harmonic_table(self.max_degree, pts, even_degrees(self.max_degree))
        return np.concatenate([table[k] for k in even_degrees(self.max_degree)]).T

    def evaluate(self, points) -> np.ndarray | float:
        """Evaluate at unit vectors (non-unit inputs are projected radially)."""
        pts, single = _as_points(points)
        vals = np.zeros(len(pts))
        active = [k for k in even_degrees(self.max_degree) if np.any(self.blocks[k])]
        if active:
            orders = {abs(m) for k in active for m in range(-k, k + 1) if self.blocks[k][k + m] != 0.0}
            for k, m, basis in _harmonic_stream(max(active), pts, active, orders):
                c = self.blocks[k][k + m]
                if c != 0.0:
                    vals += c * basis
        return float(vals[0]) if single else vals

    __call__ = evaluate

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.flat))

    def scaled_blocks(self, factors: dict) -> HarmonicExpansion:
        return HarmonicExpansion(self.max_degree, {k: factors[k] * b for k, b in self.blocks.items()})

    def __add__(self, other: HarmonicExpansion) -> HarmonicExpansion:
        L = max(self.max_degree, other.max_degree)
        a, b = self.padded(L), other.padded(L)
        return HarmonicExpansion(L, {k: a.blocks[k] + b.blocks[k] for k in a.blocks})

    def __mul__(self, c: float) -> HarmonicExpansion:
        return HarmonicExpansion(self.max_degree, {k: c * b for k, b in self.blocks.items()})

    __rmul__ = __mul__

    def padded(self, max_degree: int) -> HarmonicExpansion:
        if max_degree < self.max_degree:
            raise ValueError("cannot pad to a smaller degree")
        return HarmonicExpansion(max_degree, dict(self.blocks))

    def add_constant(self, c: float) -> HarmonicExpansion:
        blocks = dict(self.blocks)
        blocks[0] = blocks[0] + c * math.sqrt(4.0 * math.pi)
        return HarmonicExpansion(self.max_degree, blocks)

    def rotated(self, Q) -> HarmonicExpansion:
        """Coefficients of ``w -> f(Q^T w)``, by exact re-projection."""
        Q = np.asarray(Q, dtype=float)
        rule = _projection_rule(2 * self.max_degree)
        vals = self.evaluate(rule.nodes @ Q)  # f(Q^T w) for row vectors w
        return _project_values(vals, rule, self.max_degree)

    def to_records(self) -> list[dict]:
        return [
            {"degree": k, "order": m, "value": float(self.blocks[k][k + m])}
            for k in even_degrees(self.max_degree)
            for m in range(-k, k + 1)
        ]


def _projection_rule(degree: int):
    n_polar = max(4, degree // 2 + 2)
    n_az = max(8, 2 * (degree // 2) + 4)
    return build_sphere_rule(n_polar, n_az)


CHOP = 1e-14


def _project_values(values: np.ndarray, rule, max_degree: int) -> HarmonicExpansion:
    """Quadrature projection; coefficients at round-off level are set to zero."""
    proto = HarmonicExpansion.zeros(max_degree)
    B = proto.basis(rule.nodes)
    coeffs = B.T @ (rule.weights * values)
    coeffs[np.abs(coeffs) < CHOP * max(1.0, float(np.max(np.abs(coeffs))))] = 0.0
    return HarmonicExpansion.from_flat(max_degree, coeffs)


def _poly_degree(terms) -> int:
    return max((int(sum(e)) for e, _ in terms), default=0)


def evaluate_polynomial(terms, points) -> np.ndarray:
    pts, _ = _as_points(points)
    out = np.zeros(len(pts))
    for exps, coef in terms:
        i, j, k = (int(e) for e in exps)
        out += coef * pts[:, 0] ** i * pts[:, 1] ** j * pts[:, 2] ** k
    return out


class OddProfileError(ValueError):
    """Polynomial has a component that is odd on the sphere."""


class TruncationError(ValueError):
    """max_degree is too small to represent the input."""


def project_polynomial(terms, max_degree: int = DEFAULT_MAX_DEGREE, tol: float = 1e-10) -> HarmonicExpansion:
    """Project a polynomial, restricted to the unit sphere, onto even harmonics.

    Parameters
    ----------
    terms : sequence of ((i, j, k), coefficient)
        Monomials ``c x1^i x2^j x3^k``.
    max_degree : int
        Even truncation degree of the expansion.
    tol : float
        Relative tolerance for the odd-part and reconstruction checks.
    """
    terms = [(tuple(int(e) for e in exps), float(c)) for exps, c in terms]
    if any(min(e) < 0 for e, _ in terms):
        raise ValueError("exponents must be nonnegative")
    deg = _poly_degree(terms)
    test = fibonacci_sphere(500)
    vals = evaluate_polynomial(terms, test)
    scale = max(1.0, float(np.max(np.abs(vals))))
    half = len(test) // 2
    odd = 0.5 * (vals[:half] - vals[half:])
    if np.max(np.abs(odd)) > tol * scale:
        raise OddProfileError(f"profile has an odd component of size {np.max(np.abs(odd)):.3e}")
    rule = _projection_rule(deg + max_degree)
    expansion = _project_values(evaluate_polynomial(terms, rule.nodes), rule, max_degree)
    resid = np.max(np.abs(expansion.evaluate(test) - vals))
    if resid > tol * scale:
        raise TruncationError(f"max_degree={max_degree} too small: reconstruction residual {resid:.3e}")
    return expansion


def fourier_multiplier(degree: int) -> float:
    """``b_{2k}``, the Fourier eigenvalue of ``Phi_{2k}(x)/|x|^{1+2k}``.

    Uses ``b_0 = sqrt(2/pi)`` and ``b_{2k+2} = -b_{2k} (2k+2)/(2k+1)``.
    """
    if degree < 0 or degree % 2:
        raise ValueError(f"degree must be even and nonnegative, got {degree}")
    b = math.sqrt(2.0 / math.pi)
    for k in range(degree // 2):
        b *= -(2 * k + 2) / (2 * k + 1)
    return b


def hat_profile(psi: HarmonicExpansion) -> HarmonicExpansion:
    return psi.scaled_blocks({k: fourier_multiplier(k) for k in psi.blocks})


class ScanResult(NamedTuple):
    min_value: float
    argmin: np.ndarray
    strictly_positive: bool
    nonnegative: bool


def positivity_scan(f: HarmonicExpansion, grid_resolution: int = 64, tol_pos: float = TOL_POS) -> ScanResult:
    """Minimum of ``f`` over the sphere: grid search refined by local descent.

    The grid is a Fibonacci set of ``2 * grid_resolution**2`` points plus the
    coordinate axes and cube diagonals (all antipodally symmetric).
    """
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be >= 16")
    diag = np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [-1, 1, 1]]) / math.sqrt(3.0)
    grid = np.concatenate([fibonacci_sphere(grid_resolution**2), np.eye(3), -np.eye(3), diag, -diag])
    vals = f.evaluate(grid)
    best = int(np.argmin(vals))
    p = grid[best]
    frame = np.linalg.svd(np.eye(3) - np.outer(p, p))[0][:, :2]

    def local(uv):
        q = p + frame @ uv
        return f.evaluate(q / np.linalg.norm(q))

    res = minimize(local, np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 4000})
    q = p + frame @ res.x
    q /= np.linalg.norm(q)
    if res.fun < vals[best]:
        min_value, argmin = float(res.fun), q
    else:
        min_value, argmin = float(vals[best]), p
    return ScanResult(min_value, argmin, min_value > tol_pos, min_value > -tol_pos)


def sobolev_embedding_constant(s: float, cutoff: int) -> float:
    """Partial sum of the ``H^s(S^2) -> C^0`` embedding constant.

    ``(4 pi)^{-1/2} (sum_{k <= cutoff} (2k+1) / (1 + sqrt(k(k+1)))^{2s})^{1/2}``.
    """
    if s <= 1:
        raise ValueError("the embedding requires s > 1")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    k = np.arange(cutoff + 1, dtype=float)
    terms = (2 * k + 1) / (1.0 + np.sqrt(k * (k + 1))) ** (2 * s)
    return float(math.sqrt(math.fsum(terms)) / math.sqrt(4 * math.pi))


@dataclass(frozen=True, eq=False)
class Profile:
    """Physical profile ``psi`` with its transform ``psi_hat`` and input record."""

    psi: HarmonicExpansion
    provenance: dict = field(default_factory=dict, compare=False)
    psi_hat: HarmonicExpansion = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "psi_hat", hat_profile(self.psi))
        object.__setattr__(self, "_node_cache", {})

    def hat_on(self, rule) -> np.ndarray:
        """``psi_hat`` at the nodes of a sphere rule (cached per rule)."""
        key = rule_key(rule)
        vals = self._node_cache.get(key)
        if vals is None:
            if len(self._node_cache) > 32:
                self._node_cache.clear()
            vals = self.psi_hat.evaluate(rule.nodes)
            vals.setflags(write=False)
            self._node_cache[key] = vals
        return vals

    @classmethod
    def from_polynomial(cls, terms, max_degree: int = DEFAULT_MAX_DEGREE) -> Profile:
        terms = [(tuple(int(e) for e in exps), float(c)) for exps, c in terms]
        return cls(project_polynomial(terms, max_degree),
                   {"type": "polynomial", "terms": [{"exps": list(e), "coef": c} for e, c in terms]})

    @classmethod
    def from_harmonic(cls, records, max_degree: int = DEFAULT_MAX_DEGREE) -> Profile:
        blocks = {}
        for rec in records:
            k, m = int(rec["degree"]), int(rec["order"])
            if k % 2 or k > max_degree or abs(m) > k:
                raise ValueError(f"invalid harmonic coefficient (degree={k}, order={m})")
            blocks.setdefault(k, np.zeros(2 * k + 1))[k + m] += float(rec["value"])
        return cls(HarmonicExpansion(max_degree, blocks), {"type": "harmonic", "coeffs": list(records)})

    @classmethod
    def coulomb(cls, max_degree: int = DEFAULT_MAX_DEGREE) -> Profile:
        return cls.from_polynomial([((0, 0, 0), 1.0)], max_degree)

    def perturbed(self, eps: float) -> Profile:
        """``Psi + sqrt(pi/2) eps``, whose transform is ``Psi_hat + eps``."""
        prov = {"type": "perturbed", "eps": float(eps), "base": self.provenance}
        return Profile(self.psi.add_constant(math.sqrt(math.pi / 2.0) * eps), prov)

    def rotated(self, Q) -> Profile:
        """Profile ``w -> Psi(Q^T w)``."""
        return Profile(self.psi.rotated(Q), {"type": "rotated", "base": self.provenance})

    def hat(self, points) -> np.ndarray:
        return self.psi_hat.evaluate(points)

    def __call__(self, points) -> np.ndarray:
        return self.psi.evaluate(points)
