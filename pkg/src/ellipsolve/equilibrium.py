"""Stationary shape matrices of the auxiliary convex function and the
perturbation continuation that detects loss of dimension.

With ``Psi_hat`` the transformed profile and ``M`` a positive-definite shape
matrix,

    g(M) = C_G * int Psi_hat(w) (M w.w)^(-1/2) dw,     f(M) = g(M) + tr M,

and ``grad f(M) = I - KAPPA * int w w^T Psi_hat (M w.w)^(-3/2) dw``. A zero of
the gradient is the shape matrix ``R D(a^2) R^T`` of the minimising ellipsoid.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import (
    ConvergenceError,
    DegenerateShapeError,
    HypothesisError,
    InconclusiveTrace,
    TheoryViolation,
)
from .harmonics import Profile, positivity_scan
from .quadrature import (
    SphereQuadrature,
    adapted_sphere_rule,
    build_graded_sphere_rule,
    build_sphere_rule,
    gauss_legendre,
)
from .shapes import BALL_VOLUME, Shape, as_shape_matrix, gauge_fixed_eigh

log = logging.getLogger(__name__)

KAPPA = math.sqrt(math.pi / 2.0) / BALL_VOLUME
C_G = math.sqrt(2.0 * math.pi) / BALL_VOLUME


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, quadrature sizes and the continuation schedule."""

    grad_tol: float = 1e-10
    max_iter: int = 200
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtrack: int = 60
    eps0: float = 0.1
    eps_factor: float = 0.5
    eps_steps: int = 20
    max_extra_steps: int = 10
    degeneracy_ratio: float = 1e-3
    stabilise_tol: float = 1e-3
    n_polar: int = 64
    n_azimuth: int = 128
    graded_trigger: float = 1e-2
    grading: int = 6
    tol_pos: float = 1e-10
    max_regrids: int = 6

    def __post_init__(self):
        positive = ("grad_tol", "max_iter", "armijo", "eps0", "degeneracy_ratio",
                    "stabilise_tol", "graded_trigger", "tol_pos")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.eps_factor < 1:
            raise ValueError("eps_factor must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.eps_steps < 2:
            raise ValueError("eps_steps must be >= 2")
        if self.grading < 1:
            raise ValueError("grading must be >= 1")

    def rule(self, M=None) -> SphereQuadrature:
        return adapted_sphere_rule(M, self.n_polar, self.n_azimuth, self.graded_trigger, self.grading)


# ---------------------------------------------------------------- integrals


def _rule(M, rule):
    return rule if rule is not None else adapted_sphere_rule(M)


def _quadratic_form(nodes, M):
    q = np.einsum("ni,ij,nj->n", nodes, M, nodes)
    if np.any(q <= 0):
        raise FloatingPointError("shape matrix degenerate at a quadrature node")
    return q


def sphere_moments(profile: Profile, M, rule: SphereQuadrature | None = None):
    """``(J0, J2)`` with ``J0 = int Psi_hat / sqrt(Mw.w)`` and
    ``J2 = int w w^T Psi_hat / (Mw.w)^(3/2)``.

    ``M`` may be positive semi-definite as long as ``Mw.w > 0`` at every node.
    """
    rule = _rule(M, rule)
    w = rule.weights * profile.hat_on(rule)
    q = _quadratic_form(rule.nodes, M)
    J0 = float(np.sum(w / np.sqrt(q)))
    J2 = (rule.nodes * (w / q**1.5)[:, None]).T @ rule.nodes
    return J0, 0.5 * (J2 + J2.T)


def g_value(profile: Profile, M, rule: SphereQuadrature | None = None) -> float:
    M = as_shape_matrix(M)
    return C_G * sphere_moments(profile, M, rule)[0]


def f_value(profile: Profile, M, rule: SphereQuadrature | None = None) -> float:
    M = as_shape_matrix(M)
    return g_value(profile, M, rule) + float(np.trace(M))


def f_gradient(profile: Profile, M, rule: SphereQuadrature | None = None) -> np.ndarray:
    """Symmetric gradient: ``df = tr(G dM)``."""
    M = as_shape_matrix(M)
    return np.eye(3) - KAPPA * sphere_moments(profile, M, rule)[1]


def el_residual(profile: Profile, M, rule: SphereQuadrature | None = None) -> float:
    """Largest entry of ``|KAPPA * J2(M) - I|``."""
    return float(np.max(np.abs(f_gradient(profile, M, rule))))


def t_min(profile: Profile, M, rule: SphereQuadrature | None = None) -> float:
    """Minimiser of ``t -> f(t M) = t^(-1/2) g(M) + t tr(M)``."""
    M = as_shape_matrix(M)
    return (g_value(profile, M, rule) / (2.0 * float(np.trace(M)))) ** (2.0 / 3.0)


def reduced_f(profile: Profile, M, rule: SphereQuadrature | None = None) -> float:
    """``min_t f(t M) = (3 / 2^(2/3)) g^(2/3) h^(1/3)`` with ``h = tr M``."""
    M = as_shape_matrix(M)
    g = g_value(profile, M, rule)
    return 3.0 / 2.0 ** (2.0 / 3.0) * g ** (2.0 / 3.0) * float(np.trace(M)) ** (1.0 / 3.0)


# ------------------------------------------------------------------ Newton


class _Face(NamedTuple):
    """Restriction ``M = P N P^T`` with ``P`` a 3 x d orthonormal frame."""

    P: np.ndarray

    @property
    def dim(self) -> int:
        return self.P.shape[1]

    def embed(self, N):
        return self.P @ N @ self.P.T


def _pairs(d):
    return [(i, i) for i in range(d)] + [(i, j) for i in range(d) for j in range(i + 1, d)]


def _sym(d, s):
    S = np.zeros((d, d))
    for k, (i, j) in enumerate(_pairs(d)):
        S[i, j] = S[j, i] = s[k]
    return S


class _State(NamedTuple):
    f: float
    G: np.ndarray  # gradient in the face coordinates, d x d
    H: np.ndarray  # Hessian in congruence-scaled coordinates
    g_s: np.ndarray  # gradient in congruence-scaled coordinates
    L: np.ndarray


def _evaluate(profile, N, face, rule, hessian=True) -> _State:
    d = face.dim
    L = np.linalg.cholesky(N)
    u = rule.nodes @ face.P  # in-face components of each node
    v = u @ L
    q = np.einsum("ni,ni->n", v, v)
    if np.any(q <= 0):
        raise FloatingPointError("shape matrix degenerate at a quadrature node")
    w = rule.weights * profile.hat_on(rule)
    f = C_G * float(np.sum(w / np.sqrt(q))) + float(np.trace(N))
    J2 = (u * (w / q**1.5)[:, None]).T @ u
    G = np.eye(d) - KAPPA * 0.5 * (J2 + J2.T)
    if not hessian:
        return _State(f, G, None, None, L)
    Gs = L.T @ G @ L
    pairs = _pairs(d)
    g_s = np.array([Gs[i, j] * (1.0 if i == j else 2.0) for i, j in pairs])
    feats = np.column_stack([v[:, i] * v[:, j] * (1.0 if i == j else 2.0) for i, j in pairs])
    H = 0.75 * C_G * (feats * (w / q**2.5)[:, None]).T @ feats
    return _State(f, G, 0.5 * (H + H.T), g_s, L)


class NewtonResult(NamedTuple):
    N: np.ndarray
    residual: float
    iterations: int
    condition: float
    f: float


def _newton(profile, N0, face, rule, config: SolverConfig, on_iterate=None) -> NewtonResult:
    N = np.array(N0, dtype=float)
    d = face.dim
    st = _evaluate(profile, N, face, rule)
    for it in range(config.max_iter + 1):
        res = float(np.max(np.abs(st.G)))
        if res <= config.grad_tol:
            return NewtonResult(N, res, it, float(np.linalg.cond(st.H)), st.f)
        if it == config.max_iter:
            break
        try:
            step = -np.linalg.solve(st.H, st.g_s)
        except np.linalg.LinAlgError:
            step = -st.g_s
        if not np.all(np.isfinite(step)):
            raise ConvergenceError("Newton system is singular")
        S = _sym(d, step)
        slope = float(st.g_s @ step)
        if slope >= 0:  # numerically flat; fall back to steepest descent
            step = -st.g_s
            S, slope = _sym(d, step), -float(st.g_s @ st.g_s)
        t = 1.0
        for _ in range(config.max_backtrack):
            if np.linalg.eigvalsh(np.eye(d) + t * S)[0] > 0:
                trial = st.L @ (np.eye(d) + t * S) @ st.L.T
                trial = 0.5 * (trial + trial.T)
                try:
                    new = _evaluate(profile, trial, face, rule)
                except (FloatingPointError, np.linalg.LinAlgError):
                    new = None
                if new is not None and new.f <= st.f + config.armijo * t * slope + 1e-14 * abs(st.f):
                    break
            t *= config.backtrack
        else:
            raise ConvergenceError(f"line search failed at iteration {it} (residual {res:.3e})")
        N, st = trial, new
        if on_iterate is not None:
            on_iterate(face.embed(N))
    raise ConvergenceError(
        f"no convergence in {config.max_iter} iterations (residual {float(np.max(np.abs(st.G))):.3e})"
    )


def _aligned(rule: SphereQuadrature, M, config: SolverConfig) -> bool:
    lam, R = gauge_fixed_eigh(M)
    thin = lam[-1] < config.graded_trigger * lam[0]
    if rule.grading == 0:
        return not thin
    return thin and abs(float(rule.axis @ R[:, 2])) > 1.0 - 1e-12


def _solve_full(profile, M0, config: SolverConfig, rule=None, on_iterate=None):
    """Newton on the full 3 x 3 matrix, re-gridding until the rule matches ``M``."""
    face = _Face(np.eye(3))
    M = as_shape_matrix(M0)
    fixed = rule is not None
    for _ in range(config.max_regrids):
        r = rule if fixed else config.rule(M)
        out = _newton(profile, M, face, r, config, on_iterate)
        M = out.N
        if fixed or _aligned(r, M, config):
            return out, r
    log.warning("quadrature axis did not settle after %d re-grids", config.max_regrids)
    return out, r


class EquilibriumSolution(NamedTuple):
    """Result of a direct solve."""

    matrix: np.ndarray
    shape: Shape
    residual: float
    iterations: int = 0
    condition: float = float("nan")
    f: float = float("nan")


def check_profile(profile: Profile, config: SolverConfig | None = None, strict: bool = False):
    """Sign checks on ``Psi`` and ``Psi_hat``; raises :class:`HypothesisError`."""
    config = config or SolverConfig()
    psi = positivity_scan(profile.psi, tol_pos=config.tol_pos)
    if not psi.strictly_positive:
        raise HypothesisError(f"profile is not strictly positive (min {psi.min_value:.3e})")
    hat = positivity_scan(profile.psi_hat, tol_pos=config.tol_pos)
    if not hat.nonnegative:
        raise HypothesisError(f"transformed profile is negative somewhere (min {hat.min_value:.3e})")
    if strict and not hat.strictly_positive:
        raise HypothesisError(f"transformed profile is not strictly positive (min {hat.min_value:.3e})")
    return psi, hat


def initial_matrix(profile: Profile, config: SolverConfig | None = None) -> np.ndarray:
    config = config or SolverConfig()
    return t_min(profile, np.eye(3), config.rule()) * np.eye(3)


def solve_equilibrium(profile: Profile, config: SolverConfig | None = None, M0=None,
                      rule: SphereQuadrature | None = None, check: bool = True) -> EquilibriumSolution:
    """Minimise ``f`` over positive-definite matrices by damped Newton.

    Parameters
    ----------
    profile : Profile
        ``Psi_hat`` must be nonnegative; when it vanishes somewhere the
        minimiser may be flat, which is reported as
        :class:`DegenerateShapeError` (use :func:`continuation_solve`).
    config : SolverConfig, optional
    M0 : (3, 3) array, optional
        Starting matrix; defaults to ``t_min(I) I``.
    rule : SphereQuadrature, optional
        Fixed quadrature. By default the rule adapts to the iterate.
    check : bool
        Run the sign scans first.
    """
    config = config or SolverConfig()
    if check:
        check_profile(profile, config)
    M0 = initial_matrix(profile, config) if M0 is None else M0

    def guard(M):
        lam = np.linalg.eigvalsh(M)
        if math.sqrt(max(lam[0], 0.0) / lam[-1]) < config.degeneracy_ratio:
            raise DegenerateShapeError(
                f"semi-axis ratio fell below {config.degeneracy_ratio:g}; use continuation_solve"
            )

    out, _ = _solve_full(profile, M0, config, rule, guard)
    guard(out.N)
    shape = Shape.from_matrix(out.N)
    return EquilibriumSolution(out.N, shape, out.residual, out.iterations, out.condition, out.f)


# ------------------------------------------------------------ continuation


class Classification(str, enum.Enum):
    ELLIPSOID = "Ellipsoid"
    SEMI_ELLIPSOID = "SemiEllipsoid"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TraceEntry:
    eps: float
    semiaxes: tuple
    residual: float
    condition: float
    iterations: int
    energy: float

    def to_dict(self) -> dict:
        return {"eps": self.eps, "semiaxes": list(self.semiaxes), "residual": self.residual,
                "condition": self.condition, "iterations": self.iterations, "energy": self.energy}


@dataclass(frozen=True)
class SolveResult:
    classification: Classification
    shape: Shape
    shape_matrix: np.ndarray
    el_residual: float
    energy: float
    continuation_trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        flat = self.shape.is_degenerate
        if flat != (self.classification is Classification.SEMI_ELLIPSOID):
            raise ValueError("classification inconsistent with shape")


def _rel_change(values):
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(np.diff(values))) / max(abs(values[-1]), 1e-300))


def classify(trace, config: SolverConfig | None = None) -> Classification:
    """Decide the limit type from the last three entries of a trace.

    Raises
    ------
    TheoryViolation
        Two semi-axes collapse relative to the largest one.
    """
    config = config or SolverConfig()
    if len(trace) == 0:
        raise ValueError("empty trace")
    a = np.array([e.semiaxes if isinstance(e, TraceEntry) else e for e in trace], dtype=float)
    r2, r3 = a[:, 1] / a[:, 0], a[:, 2] / a[:, 0]
    if r2[-1] < config.degeneracy_ratio:
        raise TheoryViolation(
            f"trace collapses onto a segment or point (a2/a1={r2[-1]:.3e}, a3/a1={r3[-1]:.3e})"
        )
    if len(trace) < 3:
        return Classification.INCONCLUSIVE
    last = slice(-3, None)
    if r3[-1] < config.degeneracy_ratio:
        decreasing = bool(np.all(np.diff(r3[last]) < 0))
        if decreasing and _rel_change(r2[last]) < config.stabilise_tol:
            return Classification.SEMI_ELLIPSOID
        return Classification.INCONCLUSIVE
    if _rel_change(a[last, 2]) < config.stabilise_tol:
        return Classification.ELLIPSOID
    return Classification.INCONCLUSIVE


def richardson_limit(eps, values) -> np.ndarray:
    """Value at ``eps = 0`` of the polynomial through the given samples."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    V = np.vander(eps / eps[0], len(eps), increasing=True)
    return np.linalg.solve(V, values)[0]


def _face_solve(profile, M, config: SolverConfig) -> tuple[NewtonResult, _Face, SphereQuadrature]:
    """Newton on the flat face ``M = P N P^T`` spanned by the two stiff axes."""
    lam, R = gauge_fixed_eigh(M)
    face = _Face(R[:, :2].copy())
    base = build_sphere_rule(config.n_polar, config.n_azimuth)
    rule = build_graded_sphere_rule(R[:, 2], 1, base)
    N0 = np.diag(lam[:2])
    return _newton(profile, N0, face, rule, config), face, rule


def continuation_solve(profile: Profile, config: SolverConfig | None = None, check: bool = True,
                       callback=None) -> SolveResult:
    """Track minimisers for ``Psi_hat + eps`` as ``eps`` decreases geometrically.

    The schedule ``eps0 * eps_factor**k`` is run for ``k = 0..eps_steps`` and
    extended by up to ``max_extra_steps`` while the trace is inconclusive.
    """
    config = config or SolverConfig()
    if check:
        check_profile(profile, config)
    trace: list[TraceEntry] = []
    M = None
    k, last_k = 0, config.eps_steps
    status = Classification.INCONCLUSIVE
    while k <= last_k:
        eps = config.eps0 * config.eps_factor**k
        pert = profile.perturbed(eps)
        M0 = initial_matrix(pert, config) if M is None else M
        out, _ = _solve_full(pert, M0, config)
        M = out.N
        entry = TraceEntry(eps, tuple(float(v) for v in Shape.from_matrix(M).semiaxes),
                           out.residual, out.condition, out.iterations, out.f / 5.0)
        trace.append(entry)
        if callback is not None:
            callback(entry)
        log.debug("eps=%.3e semiaxes=%s residual=%.2e", eps, entry.semiaxes, out.residual)
        if k == last_k:
            status = classify(trace, config)
            if status is Classification.INCONCLUSIVE and last_k < config.eps_steps + config.max_extra_steps:
                last_k += 1
        k += 1
    if status is Classification.INCONCLUSIVE:
        raise InconclusiveTrace(f"trace inconclusive after {len(trace)} steps: last semiaxes {trace[-1].semiaxes}")

    if status is Classification.ELLIPSOID:
        sol = solve_equilibrium(profile, config, M0=M, check=False)
        return SolveResult(status, sol.shape, sol.matrix, sol.residual, sol.f / 5.0, trace,
                           {"iterations": sol.iterations, "condition": sol.condition})

    tail = trace[-3:]
    extrapolated = richardson_limit([e.eps for e in tail], [e.semiaxes[:2] for e in tail])
    out, face, _ = _face_solve(profile, M, config)
    lam, U = gauge_fixed_eigh(np.pad(out.N, ((0, 1), (0, 1))))
    R = np.column_stack([face.P @ U[:2, :2], np.cross(*(face.P @ U[:2, :2]).T)])
    shape = Shape(np.array([math.sqrt(lam[0]), math.sqrt(lam[1]), 0.0]), R)
    diagnostics = {
        "extrapolated_semiaxes": [float(v) for v in extrapolated],
        "face_iterations": out.iterations,
        "condition": out.condition,
        "in_plane_residual": out.residual,
    }
    return SolveResult(status, shape, shape.matrix, out.residual, out.f / 5.0, trace, diagnostics)


# ------------------------------------------------------------- p functions


def _p_quartic_integrand(psi, t, lead_power, denom_power):
    s2, c2 = np.sin(psi) ** 2, np.cos(psi) ** 2
    lead = (s2 - 2.0 * c2) ** lead_power
    return lead * (s2 + 4.0 * s2**2) / (s2 + t * c2) ** denom_power * np.sin(psi)


def _symmetric_half(fn, t, n):
    k = 3 if t < 1 else 1
    s, w = gauss_legendre(n, 0.0, 1.0)
    psi = 0.5 * math.pi * s**k
    jac = 0.5 * math.pi * k * s ** (k - 1)
    return 2.0 * float(np.sum(w * jac * fn(psi)))


def p_quartic(t: float, n: int = 128) -> float:
    """Spheroid stationarity function for the quartic example profile.

    ``p(t) = int_0^pi (sin^2 - 2 cos^2)(sin^2 + 4 sin^4) / (sin^2 + t cos^2)^(3/2) sin dpsi``.
    The integrand is symmetric about ``pi/2``; the half-range is integrated
    with Gauss-Legendre nodes clustered at the pole to resolve the ``sqrt(t)``
    boundary layer.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n < 32:
        raise ValueError("need n >= 32")
    if t == 0:
        # sin^3 cancels exactly; avoids 0/0 at the pole node limit
        return _symmetric_half(lambda p: (np.sin(p) ** 2 - 2 * np.cos(p) ** 2) * (1 + 4 * np.sin(p) ** 2), 0.0, n)
    return _symmetric_half(lambda p: _p_quartic_integrand(p, t, 1, 1.5), t, n)


def q_quartic(t: float, n: int = 128) -> float:
    """Companion integral with the squared lead factor and power 5/2."""
    if t <= 0:
        raise ValueError("t must be positive")
    return _symmetric_half(lambda p: _p_quartic_integrand(p, t, 2, 2.5), t, n)


def _p_quadratic_reduced(t, a1, a2, n):
    theta = 2.0 * math.pi * np.arange(n) / n
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    vals = (a2 * c2 + a1 * s2) / (t * c2 + s2) ** 1.5 * (c2 - 1.0)
    return math.sqrt(2.0 * math.pi) * float(np.sum(vals)) * (2.0 * math.pi / n)


def p_quadratic_sphere(t: float, a1: float, a2: float, n: int = 64) -> float:
    """Same function as :func:`p_quadratic`, integrated over the sphere."""
    base = build_sphere_rule(n, 4 * n)
    rule = build_graded_sphere_rule([0.0, 0.0, 1.0], 1, base)
    w1, w2, w3 = rule.nodes.T
    vals = (w1**2 - w3**2) * (a2 * w1**2 + a1 * w2**2) / (t * w1**2 + w2**2) ** 1.5
    return 2.0 * math.sqrt(2.0 / math.pi) * rule.integrate(vals)


def p_quadratic(t: float, a1: float, a2: float, n: int = 1024, check: bool = False) -> float:
    """Stationarity function for quadratic profiles with a flat direction.

    ``sqrt(2 pi) int_0^{2pi} (a2 cos^2 + a1 sin^2) (cos^2 - 1) / (t cos^2 + sin^2)^(3/2) dtheta``,
    by the periodic trapezoid rule. With ``check=True`` the sphere form is
    evaluated too and a disagreement above ``1e-8`` raises.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    val = _p_quadratic_reduced(t, a1, a2, n)
    if check:
        other = p_quadratic_sphere(t, a1, a2)
        if abs(other - val) > 1e-8 * max(1.0, abs(val)):
            raise ConvergenceError(f"p_quadratic forms disagree: {val!r} vs {other!r}")
    return val


__all__ = [
    "C_G",
    "KAPPA",
    "Classification",
    "EquilibriumSolution",
    "SolveResult",
    "SolverConfig",
    "TraceEntry",
    "check_profile",
    "classify",
    "continuation_solve",
    "el_residual",
    "f_gradient",
    "f_value",
    "g_value",
    "initial_matrix",
    "p_quadratic",
    "p_quadratic_sphere",
    "p_quartic",
    "q_quartic",
    "reduced_f",
    "richardson_limit",
    "solve_equilibrium",
    "sphere_moments",
    "t_min",
]
