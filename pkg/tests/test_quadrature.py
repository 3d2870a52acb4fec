import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipsolve import Shape
from ellipsolve.quadrature import (
    adapted_sphere_rule,
    axis_frame,
    build_graded_sphere_rule,
    build_sphere_rule,
    ellipse_area_rule,
    ellipsoid_volume_rule,
    fibonacci_sphere,
    gauss_legendre,
    integrate_sphere,
    refine,
)

from conftest import random_rotation

FOUR_PI = 4 * math.pi


def sphere_monomial(i, j, k):
    """Closed-form integral of x^i y^j z^k over the unit sphere."""
    if i % 2 or j % 2 or k % 2:
        return 0.0
    b = [(e + 1) / 2 for e in (i, j, k)]
    return 2 * math.prod(math.gamma(v) for v in b) / math.gamma(sum(b))


# ---------------------------------------------------------------- sphere rules


def test_weights_and_second_moment():
    rule = build_sphere_rule(64, 128)
    assert rule.weights.sum() == pytest.approx(FOUR_PI, abs=1e-12)
    assert integrate_sphere(lambda w: w[:, 0] ** 2, rule) == pytest.approx(FOUR_PI / 3, abs=1e-12)


def test_closed_form_moments():
    rule = build_sphere_rule(8, 16)
    assert integrate_sphere(np.ones(rule.size), rule) == pytest.approx(FOUR_PI, abs=1e-13)
    assert integrate_sphere(lambda w: w[:, 2] ** 4, rule) == pytest.approx(FOUR_PI / 5, abs=1e-13)


def test_constant_denominator_case():
    rule = build_sphere_rule(16, 32)
    val = integrate_sphere(lambda w: 1 / np.sqrt(w[:, 0] ** 2 + w[:, 1] ** 2 + w[:, 2] ** 2), rule)
    assert val == pytest.approx(FOUR_PI, abs=1e-12)


def test_coarse_and_fine_agree_on_degree_four_profile():
    def hat(w):
        z = w[:, 2]
        return 5 - 9 * z**2 + 4 * z**4

    coarse = integrate_sphere(hat, build_sphere_rule(8, 16))
    fine = integrate_sphere(hat, build_sphere_rule(64, 128))
    assert abs(coarse - fine) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_declared_exactness_on_rotated_monomials(i, j, k, seed):
    """A rotated product rule still integrates monomials within its exactness degree."""
    rule = build_sphere_rule(10, 20, axis=random_rotation(np.random.default_rng(seed))[:, 0])
    assert i + j + k <= rule.exactness_degree
    val = integrate_sphere(lambda w: w[:, 0] ** i * w[:, 1] ** j * w[:, 2] ** k, rule)
    assert val == pytest.approx(sphere_monomial(i, j, k), abs=1e-13)


def test_axis_frame_is_rotation():
    for axis in ([0, 0, 1], [0, 0, -1], [1, 2, 3], [0.3, -0.1, 0]):
        F = axis_frame(axis)
        assert np.allclose(F.T @ F, np.eye(3), atol=1e-15)
        assert np.linalg.det(F) == pytest.approx(1.0, abs=1e-14)
        assert np.allclose(F[:, 2], np.asarray(axis) / np.linalg.norm(axis), atol=1e-15)


def test_invalid_sizes_rejected():
    with pytest.raises(ValueError):
        build_sphere_rule(2, 16)
    with pytest.raises(ValueError):
        build_sphere_rule(8, 15)


def test_non_finite_integrand_raises():
    rule = build_sphere_rule(8, 16)
    with pytest.raises(FloatingPointError), np.errstate(divide="ignore"):
        integrate_sphere(lambda w: 1 / (w[:, 2] - w[0, 2]), rule)


# ---------------------------------------------------------------- graded rules


def near_singular(r):
    return lambda w: 1.0 / (w[:, 0] ** 2 + w[:, 1] ** 2 + r * w[:, 2] ** 2) ** 1.5


def graded(n, grading=6):
    return build_graded_sphere_rule([0, 0, 1], grading, build_sphere_rule(n, 2 * n))


def test_graded_rule_resolves_near_singular_integrand():
    r = 1e-4
    exact = FOUR_PI / math.sqrt(r)
    g1 = integrate_sphere(near_singular(r), graded(32))
    g2 = integrate_sphere(near_singular(r), graded(64))
    assert abs(g2 - g1) / abs(g2) < 1e-4
    assert abs(g2 - exact) / exact < 1e-10
    p1 = integrate_sphere(near_singular(r), build_sphere_rule(32, 64))
    p2 = integrate_sphere(near_singular(r), build_sphere_rule(64, 128))
    assert abs(p2 - p1) / abs(p2) > 1e-4


def test_graded_and_plain_agree_without_singularity():
    g = integrate_sphere(near_singular(1.0), graded(32))
    p = integrate_sphere(near_singular(1.0), build_sphere_rule(32, 64))
    assert abs(g - p) < 1e-10


def test_near_singular_growth():
    rule = graded(64)
    assert integrate_sphere(near_singular(1e-6), rule) > integrate_sphere(near_singular(1e-2), rule)


def test_graded_weights_sum():
    for k in (1, 3, 6):
        assert graded(32, k).weights.sum() == pytest.approx(FOUR_PI, abs=1e-12)


def test_adapted_rule_selection():
    plain = adapted_sphere_rule(np.diag([1.0, 0.5, 0.1]))
    assert plain.grading == 0
    thin = adapted_sphere_rule(np.diag([1.0, 0.5, 1e-3]))
    assert thin.grading > 0 and abs(abs(thin.axis[2]) - 1) < 1e-15
    assert adapted_sphere_rule(np.diag([1.0, 0.5, 1e-3])) is thin


# ---------------------------------------------------------------- intervals


def test_gauss_legendre_exactness():
    r = gauss_legendre(5, 0.0, 1.0)
    assert r.weights @ r.nodes**9 == pytest.approx(0.1, abs=1e-14)


def test_single_node_rule():
    r = gauss_legendre(1)
    assert r.nodes[0] == 0.0 and r.weights[0] == 2.0


def test_sine_cubed():
    r = gauss_legendre(32, 0.0, math.pi)
    assert r.weights @ np.sin(r.nodes) ** 3 == pytest.approx(4 / 3, abs=1e-12)


def test_interval_errors():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(4, 1.0, 1.0)


def test_refine_reports_difference():
    def sine_integral(n):
        r = gauss_legendre(n, 0.0, math.pi)
        return float(r.weights @ np.sin(r.nodes))

    val, err = refine(sine_integral, 4)
    assert val == pytest.approx(2.0, abs=1e-10)
    assert err > 0


# ---------------------------------------------------------------- solid and flat ellipsoids


def test_unit_ball_volume_and_second_moment():
    r = ellipsoid_volume_rule(Shape.ball(), 16, build_sphere_rule(16, 32))
    assert r.weights.sum() == pytest.approx(4 * math.pi / 3, abs=1e-12)
    assert r.weights @ np.sum(r.nodes**2, axis=1) == pytest.approx(4 * math.pi / 5, abs=1e-10)


def test_ellipsoid_volume_scaling():
    r = ellipsoid_volume_rule(Shape(np.array([2.0, 1.0, 1.0]), np.eye(3)), 8, build_sphere_rule(8, 16))
    assert r.weights.sum() == pytest.approx(8 * math.pi / 3, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.tuples(*[st.floats(0.2, 3.0)] * 3), st.integers(0, 2**31 - 1))
def test_ellipsoid_second_moment_tensor(a, seed):
    """int_E x x^T dx = |E| R diag(a^2) R^T / 5."""
    R = random_rotation(np.random.default_rng(seed))
    shape = Shape(np.array(a), R)
    r = ellipsoid_volume_rule(shape, 8, build_sphere_rule(8, 16))
    T = (r.nodes * r.weights[:, None]).T @ r.nodes
    ref = shape.volume * shape.matrix / 5
    assert np.allclose(T, ref, atol=1e-12 * shape.volume * max(a) ** 2)


def test_semi_ellipsoid_law_moments():
    r = ellipse_area_rule(1.0, 1.0, np.eye(3), 16)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(r.weights @ r.nodes, 0.0, atol=1e-12)
    assert r.weights @ r.nodes[:, 0] ** 2 == pytest.approx(0.2, abs=1e-8)


def test_semi_ellipsoid_second_moment_brute_force():
    """Independent polar-coordinate integral of the law's density times x1^2."""
    rho, wr = gauss_legendre(400, 0.0, 1.0)
    th, wt = gauss_legendre(64, 0.0, 2 * math.pi)
    dens = 3 / (2 * math.pi) * np.sqrt(1 - rho**2)
    val = (wr @ (dens * rho**3)) * (wt @ np.cos(th) ** 2)
    assert val == pytest.approx(0.2, abs=1e-6)


def test_fibonacci_is_antipodal():
    pts = fibonacci_sphere(50)
    assert pts.shape == (100, 3)
    assert np.allclose(pts[:50], -pts[50:])
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
