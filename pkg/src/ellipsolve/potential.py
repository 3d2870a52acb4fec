"""Potentials ``W * mu_E`` of ellipsoid and semi-ellipsoid laws.

For ``E = R D(a) B`` the potential of the uniform law is

    (W * mu_E)(x) = (KAPPA/2) int_S2 (1 - alpha^2) 1{|alpha| < 1} Psi_hat(w) / |D R^T w| dw,

with ``alpha = x.w / |D R^T w|``. Nondegenerate shapes are integrated after
the substitution ``w = L v / |L v|``, ``L = R D^-1``, under which
``alpha = y.v`` with ``y = D^-1 R^T x``; the cutoff becomes the polar band
``|u| < min(1, 1/|y|)`` about ``y`` and the integrand is smooth in ``(u, phi)``.
Flat shapes (``a3 = 0``) are evaluated in the plane of the ellipse, where the
polar integral separates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import KAPPA, sphere_moments
from .harmonics import Profile
from .quadrature import (
    SphereQuadrature,
    adapted_sphere_rule,
    build_graded_sphere_rule,
    build_sphere_rule,
    fibonacci_sphere,
    gauss_legendre,
)
from .shapes import BALL_VOLUME, Shape

THIN_RATIO = 1e-2
DEFAULT_RESOLUTION = (32, 64)
_CHUNK = 1 << 18


def _points(x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


def _resolution(rule):
    if rule is None:
        return DEFAULT_RESOLUTION
    return rule.n_polar, rule.n_azimuth


def alpha(x, omega, shape: Shape) -> np.ndarray | float:
    """``x.w / |D(a) R^T w|``."""
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    den = np.linalg.norm((omega @ shape.rotation) * shape.semiaxes, axis=-1)
    if np.any(den == 0):
        raise FloatingPointError("direction lies in the null space of the shape")
    out = (omega @ x) / den if omega.ndim > 1 else float(x @ omega) / float(den)
    return out


# --------------------------------------------------------- nondegenerate


def _frames(axes):
    """Right-handed frames ``(t1, t2, axis)`` for each row of ``axes``."""
    k = np.argmin(np.abs(axes), axis=1)
    helper = np.eye(3)[k]
    t1 = helper - np.sum(helper * axes, axis=1)[:, None] * axes
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(axes, t1)
    return t1, t2


def _band_integrals(profile: Profile, shape: Shape, x: np.ndarray, resolution):
    """``(P, grad, radial)`` per point via the polar-band rule in the ``v`` frame."""
    n_u, n_phi = resolution
    a, R = shape.semiaxes, shape.rotation
    Linv = 1.0 / a
    det = 1.0 / float(np.prod(a))
    y = (x @ R) / a
    ny = np.linalg.norm(y, axis=1)
    axes = np.where(ny[:, None] > 0, y / np.where(ny > 0, ny, 1.0)[:, None], np.array([0.0, 0.0, 1.0]))
    t1, t2 = _frames(axes)
    c = np.minimum(1.0, 1.0 / np.where(ny > 0, ny, 1.0))
    s, ws = gauss_legendre(n_u)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    cp, sp = np.cos(phi), np.sin(phi)
    out_p = np.empty(len(x))
    out_g = np.empty((len(x), 3))
    out_r = np.empty(len(x))
    per = max(1, _CHUNK // (n_u * n_phi))
    for lo in range(0, len(x), per):
        sl = slice(lo, lo + per)
        u = c[sl, None] * s[None, :]  # (m, n_u)
        w_u = c[sl, None] * ws[None, :]
        st = np.sqrt(1.0 - u**2)
        v = (
            st[:, :, None, None] * (cp[None, None, :, None] * t1[sl, None, None, :]
                                    + sp[None, None, :, None] * t2[sl, None, None, :])
            + u[:, :, None, None] * axes[sl, None, None, :]
        )  # (m, n_u, n_phi, 3) unit vectors in the ball frame
        Lv_local = v * Linv
        nLv = np.linalg.norm(Lv_local, axis=-1)
        Lv = Lv_local @ R.T
        omega = Lv / nLv[..., None]
        hat = profile.psi_hat.evaluate(omega.reshape(-1, 3)).reshape(nLv.shape)
        F = hat * det / nLv**2 * (w_u[:, :, None] * (2.0 * np.pi / n_phi))
        al = ny[sl, None, None] * u[:, :, None]
        out_p[sl] = 0.5 * KAPPA * np.sum((1.0 - al**2) * F, axis=(1, 2))
        out_g[sl] = -KAPPA * np.einsum("mij,mijk->mk", al * F, Lv)
        out_r[sl] = -KAPPA * np.sum(al**2 * F, axis=(1, 2))
    return out_p, out_g, out_r


def _cutoff_integrals(profile: Profile, shape: Shape, x: np.ndarray, rule: SphereQuadrature):
    """Direct form with a hard cutoff; used for very thin ellipsoids."""
    w = rule.weights * profile.hat_on(rule)
    den = np.sqrt(np.einsum("ni,ij,nj->n", rule.nodes, shape.matrix, rule.nodes))
    al = (x @ rule.nodes.T) / den[None, :]
    ind = np.abs(al) < 1.0
    base = np.where(ind, w / den, 0.0)
    P = 0.5 * KAPPA * np.sum((1.0 - al**2) * base, axis=1)
    G = -KAPPA * (al * base / den) @ rule.nodes
    Rd = -KAPPA * np.sum(al**2 * base, axis=1)
    return P, G, Rd


# ----------------------------------------------------------------- flat


class _FlatProfile:
    """``int_0^pi Psi_hat dpsi`` as a trigonometric polynomial in the in-plane angle."""

    def __init__(self, profile: Profile, shape: Shape, n_psi: int = 24):
        deg = profile.psi_hat.max_degree
        n_theta = 2 * deg + 4
        theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
        psi, wpsi = gauss_legendre(n_psi, 0.0, np.pi)
        R = shape.rotation
        sp = np.sin(psi)[:, None]
        local = np.stack([sp * np.cos(theta), sp * np.sin(theta), np.cos(psi)[:, None] * np.ones_like(theta)], -1)
        vals = profile.psi_hat.evaluate(local.reshape(-1, 3) @ R.T).reshape(n_psi, n_theta)
        self.coeffs = np.fft.rfft(wpsi @ vals) / n_theta
        self.n_theta = n_theta

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(len(self.coeffs))
        scale = np.where((k == 0) | ((self.n_theta % 2 == 0) & (k == len(self.coeffs) - 1)), 1.0, 2.0)
        ph = np.exp(1j * np.multiply.outer(theta, k))
        return np.real(ph @ (scale * self.coeffs))


def _inside_arcs(x1, x2, a1, a2):
    """Arcs of the in-plane angle on which ``|alpha| < 1``; list of (start, end)."""
    A = 0.5 * (x1**2 + x2**2 - a1**2 - a2**2)
    B = 0.5 * (x1**2 - x2**2 - a1**2 + a2**2)
    C = x1 * x2
    rho = math.hypot(B, C)
    if rho <= abs(A):
        return [(0.0, 2.0 * math.pi)] if A < 0 else []
    phi0 = math.atan2(C, B)
    beta = math.acos(-A / rho)
    start = 0.5 * (phi0 + beta)
    return [(start, start + math.pi - beta), (start + math.pi, start + 2 * math.pi - beta)]


def _flat_integrals(profile: Profile, shape: Shape, x: np.ndarray, n_theta: int, tol_plane: float = 1e-12):
    a1, a2 = shape.semiaxes[:2]
    local = x @ shape.rotation
    scale = max(1.0, float(np.max(np.abs(local))))
    if np.any(np.abs(local[:, 2]) > tol_plane * scale):
        raise ValueError("flat shapes are evaluated only at points in their plane")
    fp = _FlatProfile(profile, shape)
    s, ws = gauss_legendre(n_theta)
    P = np.zeros(len(x))
    G = np.zeros((len(x), 3))
    Rd = np.zeros(len(x))
    frame = shape.rotation[:, :2]
    for i, (x1, x2, _) in enumerate(local):
        arcs = _inside_arcs(x1, x2, a1, a2)
        for lo, hi in arcs:
            if hi - lo >= 2.0 * math.pi - 1e-15:
                th = 2.0 * math.pi * np.arange(2 * n_theta) / (2 * n_theta)
                wt = np.full(len(th), math.pi / n_theta)
            else:
                th = 0.5 * (hi - lo) * s + 0.5 * (hi + lo)
                wt = 0.5 * (hi - lo) * ws
            c, sn = np.cos(th), np.sin(th)
            q = np.sqrt(a1**2 * c**2 + a2**2 * sn**2)
            al = (x1 * c + x2 * sn) / q
            base = wt * fp(th) / q
            P[i] += 0.5 * KAPPA * np.sum((1.0 - al**2) * base)
            Rd[i] += -KAPPA * np.sum(al**2 * base)
            g2 = -KAPPA * np.array([np.sum(al * base * c / q), np.sum(al * base * sn / q)])
            G[i] += frame @ g2
    return P, G, Rd


# -------------------------------------------------------------- dispatch


def _integrals(profile, shape, x, rule):
    pts, single = _points(x)
    if shape.is_degenerate:
        out = _flat_integrals(profile, shape, pts, 2 * _resolution(rule)[0])
    elif shape.aspect_ratio < THIN_RATIO:
        r = rule if rule is not None else adapted_sphere_rule(shape.matrix)
        out = _cutoff_integrals(profile, shape, pts, r)
    else:
        out = _band_integrals(profile, shape, pts, _resolution(rule))
    if single:
        return out[0][0], out[1][0], out[2][0]
    return out


def potential(profile: Profile, shape: Shape, x, rule: SphereQuadrature | None = None):
    """``(W * mu_E)(x)`` for a point or an (N, 3) array of points.

    ``rule`` sets the resolution ``(n_polar, n_azimuth)`` of the polar-band
    rule; it is used directly for ellipsoids thinner than ``THIN_RATIO``.
    Flat shapes accept only points in their plane.
    """
    return _integrals(profile, shape, x, rule)[0]


def potential_gradient(profile: Profile, shape: Shape, x, rule: SphereQuadrature | None = None):
    """Gradient of the potential. For flat shapes only the in-plane part is returned."""
    return _integrals(profile, shape, x, rule)[1]


def radial_derivative(profile: Profile, shape: Shape, x, rule: SphereQuadrature | None = None):
    """``grad(W * mu_E)(x) . x`` as the single integral ``-KAPPA int alpha^2 1{|alpha|<1} ...``."""
    return _integrals(profile, shape, x, rule)[2]


def interior_coefficients(profile: Profile, shape: Shape, rule: SphereQuadrature | None = None):
    """``(J0, J2)`` so that the interior potential is ``(KAPPA/2)(J0 - x^T J2 x)``.

    For flat shapes ``J2`` is the 2 x 2 in-plane block in the frame of the
    first two columns of ``shape.rotation``.
    """
    if shape.is_degenerate:
        a1, a2 = shape.semiaxes[:2]
        base = build_sphere_rule(max(32, _resolution(rule)[0]), 4 * max(32, _resolution(rule)[0]))
        r = build_graded_sphere_rule(shape.normal, 1, base)
        w = r.weights * profile.hat_on(r)
        u = r.nodes @ shape.rotation[:, :2]
        q = a1**2 * u[:, 0] ** 2 + a2**2 * u[:, 1] ** 2
        J0 = float(np.sum(w / np.sqrt(q)))
        J2 = (u * (w / q**1.5)[:, None]).T @ u
        return J0, 0.5 * (J2 + J2.T)
    r = rule if rule is not None else adapted_sphere_rule(shape.matrix)
    return sphere_moments(profile, shape.matrix, r)


def hessian_inside(profile: Profile, shape: Shape, rule: SphereQuadrature | None = None) -> np.ndarray:
    """Constant Hessian ``-KAPPA J2`` of the potential inside a solid ellipsoid."""
    if shape.is_degenerate:
        raise ValueError("flat shape: use hessian_in_plane")
    return -KAPPA * interior_coefficients(profile, shape, rule)[1]


def hessian_in_plane(profile: Profile, shape: Shape, rule: SphereQuadrature | None = None) -> np.ndarray:
    """2 x 2 in-plane Hessian on a flat ellipse (frame: first two rotation columns)."""
    if not shape.is_degenerate:
        P = shape.rotation[:, :2]
        return P.T @ hessian_inside(profile, shape, rule) @ P
    return -KAPPA * interior_coefficients(profile, shape, rule)[1]


# ---------------------------------------------------------------- oracle


def _oracle_once(profile: Profile, shape: Shape, x, n: int) -> float:
    a, R = shape.semiaxes, shape.rotation
    y0 = (np.asarray(x, dtype=float) @ R) / a
    r0 = float(np.linalg.norm(y0))
    axis = y0 / r0 if r0 > 0 else np.array([0.0, 0.0, 1.0])
    t1, t2 = _frames(axis[None, :])
    t1, t2 = t1[0], t2[0]
    phi = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
    w_phi = np.pi / n
    if r0 < 1.0:
        sl, wl = gauss_legendre(n, -1.0, 0.0)
        sr, wr = gauss_legendre(n, 0.0, 1.0)
        u, wu = np.concatenate([sl, sr]), np.concatenate([wl, wr])
        rad = np.sqrt(np.maximum(r0**2 * u**2 + 1.0 - r0**2, 0.0))
        rho2 = -r0 * u + rad
        radial = 0.5 * rho2**2
        sign = 1.0
    else:
        u0 = math.sqrt(max(0.0, 1.0 - 1.0 / r0**2))
        tau, wt = gauss_legendre(n, 0.0, 1.0)
        u = u0 + (1.0 - u0) * tau**2
        wu = wt * 2.0 * (1.0 - u0) * tau
        # rho2^2 - rho1^2 = 4 r0 u sqrt(r0^2 (u - u0)(u + u0)), with (u - u0) = (1-u0) tau^2
        root = r0 * tau * np.sqrt((1.0 - u0) * (u + u0))
        radial = 2.0 * r0 * u * root
        sign = -1.0  # chords point back toward the ball
    st = np.sqrt(np.maximum(0.0, 1.0 - u**2))
    v = (st[:, None, None] * (np.cos(phi)[None, :, None] * t1 + np.sin(phi)[None, :, None] * t2)
         + sign * u[:, None, None] * axis)
    d = (v * a) @ R.T
    nd = np.linalg.norm(d, axis=-1)
    psi = profile.psi.evaluate((d / nd[..., None]).reshape(-1, 3)).reshape(nd.shape)
    integrand = psi / nd * radial[:, None]
    return float(np.sum(integrand * wu[:, None]) * w_phi / BALL_VOLUME)


def direct_convolution_oracle(profile: Profile, shape: Shape, x, n_refine: int = 48) -> tuple[float, float]:
    """``int_E W(x - y) dy / |E|`` by polar coordinates centred at ``x``.

    Uses the physical profile ``Psi`` (no Fourier transform). The radial
    integral of ``1/r`` is done analytically along each chord; the angular
    rule is refined once. Returns ``(value, |fine - coarse|)``.
    """
    if shape.is_degenerate:
        raise ValueError("oracle requires three positive semi-axes")
    coarse = _oracle_once(profile, shape, x, n_refine)
    fine = _oracle_once(profile, shape, x, 2 * n_refine)
    return fine, abs(fine - coarse)


def ball_fourier(xi, shape: Shape) -> np.ndarray | float:
    """Fourier transform of ``chi_E / |E|`` (unitary convention), at ``xi``."""
    xi = np.asarray(xi, dtype=float)
    r = np.linalg.norm((xi @ shape.rotation) * shape.semiaxes, axis=-1)
    r = np.asarray(r, dtype=float)
    small = r < 1e-4
    rs = np.where(small, 1.0, r)
    val = np.where(small, 1.0 / 3.0 - r**2 / 30.0, np.sin(rs) / rs**3 - np.cos(rs) / rs**2)
    out = math.sqrt(2.0 / math.pi) * val / BALL_VOLUME
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------- EL checks


@dataclass(frozen=True)
class PotentialReport:
    """Residuals of the two stationarity conditions for a candidate shape."""

    constancy_residual: float
    exterior_min: float
    hessian: np.ndarray
    hessian_residual: float
    plateau: float
    n_support: int
    n_rays: int
    n_exterior_points: int
    ray_factors: tuple = (1.01, 1.1, 1.5, 2.0, 5.0)
    extra: dict = field(default_factory=dict)

    def passed(self, constancy_tol: float = 1e-7, exterior_tol: float = 1e-8) -> bool:
        return self.constancy_residual <= constancy_tol and self.exterior_min >= -exterior_tol

    def to_dict(self) -> dict:
        return {
            "constancy_residual": self.constancy_residual,
            "exterior_min": self.exterior_min,
            "hessian": [[float(v) for v in row] for row in np.atleast_2d(self.hessian)],
            "hessian_residual": self.hessian_residual,
            "plateau": self.plateau,
            "n_support": self.n_support,
            "n_rays": self.n_rays,
            "n_exterior_points": self.n_exterior_points,
            "ray_factors": list(self.ray_factors),
            **self.extra,
        }


def _support_samples(shape: Shape, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if shape.is_degenerate:
        r = 0.98 * np.sqrt(rng.random(n))
        th = 2.0 * np.pi * rng.random(n)
        local = np.column_stack([r * np.cos(th), r * np.sin(th), np.zeros(n)])
    else:
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        local = d * (0.98 * rng.random(n) ** (1.0 / 3.0))[:, None]
    return shape.from_unit_ball(local)


def _boundary_samples(shape: Shape, n: int) -> np.ndarray:
    if shape.is_degenerate:
        th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        local = np.column_stack([np.cos(th), np.sin(th), np.zeros(n)])
    else:
        local = fibonacci_sphere((n + 1) // 2)[:n]
    return shape.from_unit_ball(local)


def verify_euler_lagrange(
    profile: Profile,
    shape: Shape,
    n_support: int = 200,
    n_rays: int = 200,
    rule: SphereQuadrature | None = None,
    ray_factors=(1.01, 1.1, 1.5, 2.0, 5.0),
    seed: int = 0,
) -> PotentialReport:
    """Check that ``P = W * mu_E + |x|^2 / 2`` is constant on the support and
    that ``grad P . x >= 0`` along rays leaving it.

    For flat shapes all samples lie in the plane of the ellipse.
    """
    xs = _support_samples(shape, n_support, seed)
    P = potential(profile, shape, xs, rule) + 0.5 * np.sum(xs**2, axis=1)
    xb = _boundary_samples(shape, n_rays)
    ext = np.concatenate([t * xb for t in ray_factors])
    radial = radial_derivative(profile, shape, ext, rule) + np.sum(ext**2, axis=1)
    if shape.is_degenerate:
        H = hessian_in_plane(profile, shape, rule)
        hres = float(np.max(np.abs(H + np.eye(2))))
    else:
        H = hessian_inside(profile, shape, rule)
        hres = float(np.max(np.abs(H + np.eye(3))))
    return PotentialReport(
        constancy_residual=float(np.max(P) - np.min(P)),
        exterior_min=float(np.min(radial)),
        hessian=H,
        hessian_residual=hres,
        plateau=float(np.mean(P)),
        n_support=n_support,
        n_rays=n_rays,
        n_exterior_points=len(ext),
        ray_factors=tuple(float(t) for t in ray_factors),
    )


__all__ = [
    "PotentialReport",
    "Shape",
    "alpha",
    "ball_fourier",
    "direct_convolution_oracle",
    "hessian_in_plane",
    "hessian_inside",
    "interior_coefficients",
    "potential",
    "potential_gradient",
    "radial_derivative",
    "verify_euler_lagrange",
]
