"""Command-line front end.

Usage::

    ellipsolve solve config.json --out report.json
    ellipsolve verify config.json shape.json
    ellipsolve energy config.json measure.json
    ellipsolve scan-p --variant quartic --t-min 0 --t-max 50 --steps 100 --csv p.csv
    ellipsolve fourier config.json

Exit codes: 0 success, 1 invalid input, 2 profile outside the sign
hypotheses, 3 solver non-convergence, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build_profile, build_solver_config, load
from .energy import CandidateMeasure, MeasureKind, divergence_check, energy
from .equilibrium import (
    Classification,
    continuation_solve,
    p_quadratic,
    p_quartic,
    solve_equilibrium,
)
from .exceptions import ConvergenceError, DegenerateShapeError, HypothesisError, InconclusiveTrace, TheoryViolation
from .harmonics import positivity_scan
from .potential import verify_euler_lagrange
from .shapes import Shape

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HYPOTHESIS = 2
EXIT_CONVERGENCE = 3
EXIT_VERIFY = 4


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with code 1; code 2 is reserved for the profile gate."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fail(code: int, kind: str, message: str) -> int:
    print(f"ellipsolve: {kind}: {message}", file=sys.stderr)
    return code


def _clean(obj):
    """Recursively convert numpy types for JSON, rejecting non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("non-finite value in report")
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(report: dict, out: str | None, quiet: bool) -> None:
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    if not quiet:
        sys.stdout.write(text)


def _scan_summary(profile) -> dict:
    psi = positivity_scan(profile.psi)
    hat = positivity_scan(profile.psi_hat)
    return {
        "psi_coefficients": profile.psi.to_records(),
        "psi_hat_coefficients": profile.psi_hat.to_records(),
        "psi_min": psi.min_value,
        "psi_argmin": psi.argmin,
        "psi_strictly_positive": psi.strictly_positive,
        "psi_hat_min": hat.min_value,
        "psi_hat_argmin": hat.argmin,
        "psi_hat_strictly_positive": hat.strictly_positive,
        "psi_hat_nonnegative": hat.nonnegative,
    }


def _shape_block(shape: Shape) -> dict:
    return {"semiaxes": shape.semiaxes, "rotation": shape.rotation, "shape_matrix": shape.matrix}


def _setup(args):
    cfg = load(args.config)
    return cfg, build_profile(cfg)


def cmd_solve(args) -> int:
    start = time.perf_counter()
    cfg, profile = _setup(args)
    summary = _scan_summary(profile)
    if not summary["psi_strictly_positive"]:
        return _fail(EXIT_HYPOTHESIS, "hypothesis", f"psi_min={summary['psi_min']:.3e}")
    if not summary["psi_hat_nonnegative"]:
        return _fail(EXIT_HYPOTHESIS, "hypothesis", f"psi_hat_min={summary['psi_hat_min']:.3e}")
    config = build_solver_config(cfg)
    try:
        if summary["psi_hat_strictly_positive"]:
            sol = solve_equilibrium(profile, config, check=False)
            classification, shape, residual = Classification.ELLIPSOID, sol.shape, sol.residual
            trace, diagnostics = [], {"iterations": sol.iterations, "condition": sol.condition}
        else:
            res = continuation_solve(profile, config, check=False)
            classification, shape, residual = res.classification, res.shape, res.el_residual
            trace, diagnostics = [e.to_dict() for e in res.continuation_trace], res.diagnostics
    except (ConvergenceError, InconclusiveTrace, DegenerateShapeError, TheoryViolation) as exc:
        return _fail(EXIT_CONVERGENCE, "convergence", str(exc))
    vcfg = cfg["verify"]
    check = verify_euler_lagrange(profile, shape, vcfg["n_support"], vcfg["n_rays"])
    en = energy(profile, CandidateMeasure.ellipsoid(shape), cfg["energy"]["resolution"])
    report = {
        "tool": {"name": "ellipsolve", "version": __version__},
        "config": cfg,
        "profile": summary,
        "classification": classification.value,
        "method": "direct" if not trace else "continuation",
        "shape": _shape_block(shape),
        "el_residual": residual,
        "exterior_el_min": check.exterior_min,
        "constancy_residual": check.constancy_residual,
        "energy": {"value": en.value, "error": en.error, "interaction": en.interaction,
                   "confinement": en.confinement},
        "continuation_trace": trace,
        "diagnostics": diagnostics,
        "wall_time": time.perf_counter() - start,
    }
    _emit(report, args.out or cfg["output"]["report"], args.quiet)
    return EXIT_OK


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from None


def _parse_shape(data) -> Shape:
    if "shape" in data and isinstance(data["shape"], dict):
        data = data["shape"]
    try:
        return Shape.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid shape: {exc}") from None


def cmd_verify(args) -> int:
    cfg, profile = _setup(args)
    shape = _parse_shape(_read_json(args.shape, "shape"))
    hat = positivity_scan(profile.psi_hat)
    if not hat.nonnegative:
        return _fail(EXIT_HYPOTHESIS, "hypothesis", f"psi_hat_min={hat.min_value:.3e}")
    vcfg = cfg["verify"]
    rep = verify_euler_lagrange(profile, shape, vcfg["n_support"], vcfg["n_rays"])
    passed = rep.passed(vcfg["constancy_tol"], vcfg["exterior_tol"])
    out = {"shape": _shape_block(shape), "report": rep.to_dict(), "passed": passed,
           "tolerances": {"constancy_tol": vcfg["constancy_tol"], "exterior_tol": vcfg["exterior_tol"]}}
    _emit(out, args.out or cfg["output"]["report"], args.quiet)
    if not passed:
        return _fail(EXIT_VERIFY, "verify", f"constancy={rep.constancy_residual:.3e} exterior_min={rep.exterior_min:.3e}")
    return EXIT_OK


def cmd_energy(args) -> int:
    cfg, profile = _setup(args)
    data = _read_json(args.measure, "measure")
    try:
        mu = CandidateMeasure.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid measure: {exc}") from None
    if mu.kind is MeasureKind.SEGMENT:
        div = divergence_check(mu, cfg["energy"]["levels"], profile)
        out = {"measure": mu.to_dict(), "status": "divergent" if div.divergent else "inconclusive",
               "levels": [{"n": n, "value": v} for n, v in zip(div.resolutions, div.values)],
               "increments": div.increments}
    else:
        en = energy(profile, mu, cfg["energy"]["resolution"])
        out = {"measure": mu.to_dict(), "status": "finite", "value": en.value, "error": en.error,
               "interaction": en.interaction, "confinement": en.confinement}
    _emit(out, args.out or cfg["output"]["report"], args.quiet)
    return EXIT_OK


def cmd_scan_p(args) -> int:
    if args.steps < 1:
        raise ConfigError("steps must be >= 1")
    if not args.t_min < args.t_max:
        raise ConfigError("need t_min < t_max")
    if args.variant == "quartic" and args.t_min < 0:
        raise ConfigError("quartic scan needs t_min >= 0")
    if args.variant == "quadratic" and args.t_min <= 0:
        raise ConfigError("quadratic scan needs t_min > 0")
    if args.log:
        if args.t_min <= 0:
            raise ConfigError("log spacing needs t_min > 0")
        ts = np.geomspace(args.t_min, args.t_max, args.steps + 1)
    else:
        ts = np.linspace(args.t_min, args.t_max, args.steps + 1)
    if args.variant == "quartic":
        ps = [p_quartic(float(t)) for t in ts]
    else:
        a1, a2 = args.alpha
        ps = [p_quadratic(float(t), a1, a2) for t in ts]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "p"])
    for t, p in zip(ts, ps):
        writer.writerow([repr(float(t)), repr(float(p))])
    target = args.csv
    if target is None and args.config:
        target = load(args.config)["output"]["csv"]
    if target:
        Path(target).write_text(buf.getvalue())
    if not args.quiet:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_fourier(args) -> int:
    cfg, profile = _setup(args)
    _emit({"profile": _scan_summary(profile)}, args.out or cfg["output"]["report"], args.quiet)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ellipsolve", description="Equilibrium shapes for anisotropic Coulomb-type energies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("config", help="JSON run configuration")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--quiet", action="store_true", help="do not echo the report")

    p = sub.add_parser("solve", help="compute and classify the minimiser")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check the stationarity conditions for a given shape")
    common(p)
    p.add_argument("shape", help="JSON with semiaxes/rotation, or a solve report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("energy", help="energy of a candidate law")
    common(p)
    p.add_argument("measure", help="JSON with kind/semiaxes/rotation")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("scan-p", help="tabulate a spheroid stationarity function")
    p.add_argument("--config", help="optional config supplying output.csv")
    p.add_argument("--variant", choices=["quartic", "quadratic"], required=True)
    p.add_argument("--t-min", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--alpha", type=float, nargs=2, default=(1.0, 1.0), metavar=("A1", "A2"))
    p.add_argument("--log", action="store_true", help="geometric spacing in t")
    p.add_argument("--csv", help="write the table here")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_scan_p)

    p = sub.add_parser("fourier", help="transformed profile and sign scans")
    common(p)
    p.set_defaults(func=cmd_fourier)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_INPUT, "input", str(exc))
    except HypothesisError as exc:
        return _fail(EXIT_HYPOTHESIS, "hypothesis", str(exc))


if __name__ == "__main__":
    sys.exit(main())
