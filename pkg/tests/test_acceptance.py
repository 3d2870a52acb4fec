"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Runs under pytest (one test per criterion) or standalone with
``python tests/test_acceptance.py``. Each criterion prints one line
``[PASS]`` or ``[FAIL]`` with the measured quantities.
"""

from __future__ import annotations

import json
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import B0, PROFILE_TERMS, random_rotation, random_spd  # noqa: E402

from ellipsolve import Profile, Shape  # noqa: E402
from ellipsolve.cli import main as cli_main  # noqa: E402
from ellipsolve.energy import CandidateMeasure, divergence_check, energy  # noqa: E402
from ellipsolve.equilibrium import (  # noqa: E402
    Classification,
    continuation_solve,
    el_residual,
    f_gradient,
    f_value,
    p_quadratic,
    p_quartic,
    q_quartic,
    solve_equilibrium,
)
from ellipsolve.harmonics import fourier_multiplier  # noqa: E402
from ellipsolve.potential import (  # noqa: E402
    direct_convolution_oracle,
    hessian_in_plane,
    hessian_inside,
    potential,
    potential_gradient,
    verify_euler_lagrange,
)
from ellipsolve.quadrature import fibonacci_sphere  # noqa: E402


@lru_cache(maxsize=None)
def profile(name: str) -> Profile:
    return Profile.from_polynomial(PROFILE_TERMS[name])


@lru_cache(maxsize=None)
def solved(name: str):
    """Solved shape for one of the five test profiles, with the solve time."""
    p = profile(name)
    t0 = time.perf_counter()
    if name in ("coulomb", "shifted", "mixed"):
        sol = solve_equilibrium(p)
        out = (sol.shape, sol.residual, None)
    else:
        res = continuation_solve(p)
        out = (res.shape, res.el_residual, res)
    return out + (time.perf_counter() - t0,)


def report(number: int, title: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})", flush=True)


# ---------------------------------------------------------------- criteria


def criterion_1():
    p = profile("coulomb")
    t0 = time.perf_counter()
    sol = solve_equilibrium(p)
    e = energy(p, CandidateMeasure.ellipsoid(sol.shape))
    elapsed = time.perf_counter() - t0
    axes_err = float(np.max(np.abs(sol.shape.semiaxes - 1.0)))
    ok = axes_err <= 1e-6 and sol.residual <= 1e-8 and abs(e.value - 1.8) <= 1e-6 and elapsed < 5.0
    return ok, f"axes err {axes_err:.1e}, residual {sol.residual:.1e}, energy {e.value:.10f}, {elapsed:.2f}s"


def criterion_2():
    b = [fourier_multiplier(k) for k in (0, 2, 4)]
    ref = [B0, -2 * B0, 8 / 3 * B0]
    b_err = max(abs(x - y) for x, y in zip(b, ref))
    pts = fibonacci_sphere(500)
    z = pts[:, 2]
    hat_err = float(np.max(np.abs(profile("quartic").hat(pts) - (5 - 9 * z**2 + 4 * z**4))))
    ok = b_err <= 1e-12 and hat_err <= 1e-8 and len(pts) == 1000
    return ok, f"multiplier err {b_err:.1e}, transform err {hat_err:.1e} on {len(pts)} points"


def criterion_3():
    shape, _, res, elapsed = solved("quartic")
    r3 = [e.semiaxes[2] / e.semiaxes[0] for e in res.continuation_trace]
    sym = max(abs(e.semiaxes[0] - e.semiaxes[1]) for e in res.continuation_trace)
    sym = max(sym, abs(shape.semiaxes[0] - shape.semiaxes[1]))
    monotone = bool(np.all(np.diff(r3) < 0))
    ok = (res.classification is Classification.SEMI_ELLIPSOID and monotone and r3[-1] < 1e-3
          and sym <= 1e-6 and elapsed < 60.0)
    return ok, (f"{res.classification.value}, {len(r3)} steps, final a3/a1 {r3[-1]:.2e}, "
                f"|a1-a2| {sym:.1e}, {elapsed:.2f}s")


def criterion_4():
    p0 = p_quartic(0.0)
    small = [p_quartic(t) for t in (1e-3, 1e-2, 0.1)]
    h = 1e-4
    ode = max(
        abs((2 + t) * (p_quartic(t + h) - p_quartic(t - h)) / (2 * h) + 1.5 * p_quartic(t) - 1.5 * q_quartic(t))
        for t in (0.5, 1.0, 2.0)
    )
    quad = [p_quadratic(t, 1.0, 1.0) for t in np.geomspace(0.1, 10, 41)]
    ok = abs(p0) <= 1e-10 and min(small) > 0 and ode <= 1e-6 and max(quad) < 0
    return ok, (f"p(0) {p0:.1e}, min p near 0 {min(small):.3e}, ODE residual {ode:.1e}, "
                f"max quadratic p {max(quad):.3f}")


def criterion_5():
    _, _, res, _ = solved("axial")
    ratios = [e.semiaxes[2] / e.semiaxes[0] for e in res.continuation_trace]
    ratios.append(res.shape.semiaxes[2] / res.shape.semiaxes[0])
    shape, residual, _, _ = solved("shifted")
    # semi-axes along the axes perpendicular to e1
    R, a = shape.rotation, shape.semiaxes
    axis1 = int(np.argmax(np.abs(R[0])))
    perp = [a[i] for i in range(3) if i != axis1]
    spread = abs(perp[0] - perp[1])
    ok = (res.classification is Classification.ELLIPSOID and min(ratios) > 0.1
          and not shape.is_degenerate and spread <= 1e-8)
    return ok, (f"axial: {res.classification.value}, min a3/a1 {min(ratios):.3f}; "
                f"1+x1^2: axes {np.round(a, 6).tolist()}, perpendicular spread {spread:.1e}")


def criterion_6():
    rng = np.random.default_rng(6)
    shape = Shape(np.array([1.7, 1.1, 0.6]), random_rotation(rng))
    y_in = rng.standard_normal((4, 3))
    y_in *= (rng.random(4) ** (1 / 3) * 0.9 / np.linalg.norm(y_in, axis=1))[:, None]
    y_bd = fibonacci_sphere(20)[rng.choice(40, 3, replace=False)]
    y_out = fibonacci_sphere(20)[rng.choice(40, 3, replace=False)] * np.array([1.3, 2.0, 4.0])[:, None]
    pts = shape.from_unit_ball(np.concatenate([y_in, y_bd, y_out]))
    worst = 0.0
    for name in ("coulomb", "shifted"):
        p = profile(name)
        vals = potential(p, shape, pts)
        for x, v in zip(pts, vals):
            worst = max(worst, abs(v - direct_convolution_oracle(p, shape, x)[0]))
    ok = worst <= 1e-4 and len(pts) == 10
    return ok, f"max |pot - oracle| {worst:.1e} over {len(pts)} points x 2 profiles"


def criterion_7():
    rng = np.random.default_rng(7)
    p = profile("mixed")
    sym = []
    for i in range(3):
        for j in range(i, 3):
            E = np.zeros((3, 3))
            E[i, j] = E[j, i] = 1.0
            sym.append(E)
    f_err = 0.0
    for _ in range(20):
        M = random_spd(rng, 0.7)
        G = f_gradient(p, M)
        h = 1e-5
        fd = np.array([(f_value(p, M + h * E) - f_value(p, M - h * E)) / (2 * h) for E in sym])
        an = np.array([np.sum(G * E) for E in sym])
        f_err = max(f_err, float(np.max(np.abs(fd - an)) / max(1.0, np.max(np.abs(an)))))
    shape = Shape(np.array([1.4, 1.0, 0.7]), random_rotation(rng))
    xs = 1.5 * rng.standard_normal((20, 3))
    g = potential_gradient(p, shape, xs)
    h = 1e-5
    e = np.eye(3) * h
    g_err = 0.0
    for x, gx in zip(xs, g):
        v = potential(p, shape, np.concatenate([x + e, x - e]))
        fd = (v[:3] - v[3:]) / (2 * h)
        g_err = max(g_err, float(np.linalg.norm(gx - fd) / max(1.0, np.linalg.norm(fd))))
    h_err = 0.0
    for name in ("coulomb", "shifted", "mixed", "axial"):
        s = solved(name)[0]
        h_err = max(h_err, float(np.max(np.abs(hessian_inside(profile(name), s) + np.eye(3)))))
    flat = solved("quartic")[0]
    h_err = max(h_err, float(np.max(np.abs(hessian_in_plane(profile("quartic"), flat) + np.eye(2)))))
    ok = f_err <= 1e-6 and g_err <= 1e-6 and h_err <= 1e-7
    return ok, f"f' FD err {f_err:.1e}, potential FD err {g_err:.1e}, Hessian err {h_err:.1e}"


def criterion_8():
    rng = np.random.default_rng(8)
    names = list(PROFILE_TERMS)
    gap = -np.inf
    for k in range(100):
        p = profile(names[k % len(names)])
        M1, M2 = random_spd(rng, 1.0), random_spd(rng, 1.0)
        g = f_value(p, 0.5 * (M1 + M2)) - 0.5 * (f_value(p, M1) + f_value(p, M2))
        gap = max(gap, g)
    el_diff = 0.0
    for _ in range(10):
        M = random_spd(rng, 0.7)
        for name in names:
            p = profile(name)
            el_diff = max(el_diff, abs(float(np.max(np.abs(f_gradient(p, M)))) - el_residual(p, M)))
    ray_min = np.inf
    n_ext = []
    for name in names:
        rep = verify_euler_lagrange(profile(name), solved(name)[0], n_support=200, n_rays=1000)
        ray_min = min(ray_min, rep.exterior_min)
        n_ext.append(rep.n_rays)
    ok = gap <= 1e-10 and el_diff <= 1e-13 and ray_min >= -1e-8 and min(n_ext) >= 1000
    return ok, f"max midpoint gap {gap:.1e}, |max|grad f| - residual| {el_diff:.1e}, ray min {ray_min:.2e}"


def criterion_9():
    seg = divergence_check(CandidateMeasure.segment(1.0), 6, profile("coulomb"))
    ball = divergence_check(CandidateMeasure.ellipsoid(Shape.ball()), 6, profile("coulomb"))
    increasing = bool(np.all(np.diff(seg.values) > 0))
    ok = increasing and not seg.plateau and seg.divergent and ball.plateau
    return ok, (f"segment increments {np.round(seg.increments, 4).tolist()}, "
                f"ball last change {abs(ball.increments[-1]):.1e}")


def criterion_10(workdir: Path):
    workdir.mkdir(parents=True, exist_ok=True)
    failures = []
    for name, terms in PROFILE_TERMS.items():
        cfg = workdir / f"{name}.json"
        cfg.write_text(json.dumps({"profile": {"type": "polynomial",
                                               "terms": [{"exps": list(e), "coef": c} for e, c in terms]}}))
        reports = []
        for k in range(2):
            out = workdir / f"{name}_{k}.json"
            if cli_main(["solve", str(cfg), "--out", str(out), "--quiet"]) != 0:
                failures.append(f"{name}: solve failed")
                break
            rep = json.loads(out.read_text())
            rep.pop("wall_time")
            reports.append(json.dumps(rep, sort_keys=True))
        if len(reports) == 2 and reports[0] != reports[1]:
            failures.append(f"{name}: reports differ")
        if cli_main(["verify", str(cfg), str(workdir / f"{name}_0.json"), "--quiet"]) != 0:
            failures.append(f"{name}: verify failed")
    ok = not failures
    return ok, "; ".join(failures) if failures else f"{len(PROFILE_TERMS)} profiles deterministic and verified"


TITLES = {
    1: "Coulomb ground truth",
    2: "Fourier multipliers",
    3: "loss of dimension",
    4: "p-function signs",
    5: "degenerate but full-dimensional",
    6: "representation equivalence",
    7: "gradient checks",
    8: "convexity and EL equivalence",
    9: "segment divergence",
    10: "determinism and round trip",
}

CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def run(number: int, tmp: Path | None = None) -> bool:
    fn = CRITERIA.get(number)
    ok, detail = criterion_10(tmp) if number == 10 else fn()
    report(number, TITLES[number], ok, detail)
    return ok


@pytest.mark.parametrize("number", range(1, 11))
def test_acceptance(number, tmp_path, capsys):
    with capsys.disabled():
        print()
        ok = run(number, tmp_path)
    assert ok


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        results = [run(n, Path(d) / "cli") for n in range(1, 11)]
    print(f"{sum(results)}/10 criteria passed")
    sys.exit(0 if all(results) else 1)
