"""Command-line front end: solve, sample, spectrum, verify, minimize.

Exit codes: 0 success, 1 verification failure, 2 usage/domain error,
3 I/O error, 4 optimizer hit its iteration cap.  The ELASTICA_LOG
environment variable (error | info | debug) sets stderr verbosity.
Flag values override an optional key=value config file, which overrides
the built-in defaults.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import discrete
from .analysis import run_verification
from .elastica import (SampledCurve, SignChoice, bending_energy,
                       enumerate_spectrum, make_critical_point, sample_curve)
from .elliptic import EllipticDomainError, complete_pair
from .modulus import Family, PinnedProblem, solve_modulus

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4

log = logging.getLogger("elastica")


@dataclasses.dataclass
class RunConfig:
    l: float
    L: float
    family: Family = Family.HAT
    n: int = 0
    sign: SignChoice = SignChoice.PLUS
    samples: int = 1024
    output_path: str = None
    format: str = "csv"


def _configure_logging():
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("ELASTICA_LOG", "error"))
    if level is None:
        level = logging.ERROR
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="elastica: %(levelname)s: %(message)s")


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line not key=value: {raw.strip()!r}")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    return values


def _merge_config(args, keys):
    """Flags override config-file entries, which override defaults."""
    if not getattr(args, "config", None):
        return
    file_values = _read_config_file(args.config)
    for key, raw in file_values.items():
        if key not in keys:
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None:
            setattr(args, key, keys[key](raw))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _problem(args) -> PinnedProblem:
    if args.l is None or args.L is None:
        raise ValueError("both --l and --L are required")
    return PinnedProblem(args.l, args.L)


def _family(name: str) -> Family:
    return Family(name)


def _sign(name: str) -> SignChoice:
    return SignChoice(name)


# --------------------------------------------------------------------------
# commands

def cmd_solve(args) -> int:
    problem = _problem(args)
    family = _family(args.family)
    sol = solve_modulus(problem, family)
    pair = complete_pair(sol.p)
    cp = make_critical_point(problem, family, 0, SignChoice.PLUS)
    print(f"family    {family.value}")
    print(f"p         {sol.p.p:.15f}")
    print(f"residual  {sol.residual:.3e}")
    print(f"K(p)      {pair.k:.15f}")
    print(f"E(p)      {pair.e:.15f}")
    print(f"b0        {cp.b:.15f}")
    print(f"lambda0   {cp.lam:.15f}")
    return EXIT_OK


def _write_csv(path, curve: SampledCurve):
    rows = ["s,x,y,kappa,tx,ty"]
    for i in range(curve.num_samples):
        rows.append(",".join(_fmt(v) for v in (
            curve.s[i], curve.x[i], curve.y[i], curve.kappa[i],
            curve.tangent_x[i], curve.tangent_y[i])))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def _write_json(path, curve: SampledCurve):
    payload = {
        "s": list(curve.s),
        "x": list(curve.x),
        "y": list(curve.y),
        "kappa": list(curve.kappa),
        "tangent_x": list(curve.tangent_x),
        "tangent_y": list(curve.tangent_y),
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _write_svg(path, curve: SampledCurve):
    # viewBox carries the data frame (y negated for svg's downward axis), so
    # the path keeps raw coordinates and parses straight back
    pad = 0.05 * max(curve.length, 1e-30)
    xs = np.concatenate([curve.x, [0.0]])
    ys = np.concatenate([-curve.y, [0.0]])
    x0, x1 = xs.min() - pad, xs.max() + pad
    y0, y1 = ys.min() - pad, ys.max() + pad
    d = "M " + " L ".join(f"{_fmt(x)} {_fmt(-y)}" for x, y in
                          zip(curve.x, curve.y))
    width = x1 - x0
    stroke = _fmt(0.003 * max(width, y1 - y0))
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="800" height="600" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(width)} {_fmt(y1 - y0)}" '
        f'preserveAspectRatio="xMidYMid meet">',
        f'  <line x1="{_fmt(x0)}" y1="0" x2="{_fmt(x1)}" y2="0" '
        f'stroke="#888" stroke-width="{stroke}"/>',
        f'  <path d="{d}" fill="none" stroke="#000" stroke-width="{stroke}"/>',
        "</svg>",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(body) + "\n")


def cmd_sample(args) -> int:
    config = RunConfig(
        l=args.l, L=args.L, family=_family(args.family), n=args.n,
        sign=_sign(args.sign), samples=args.samples,
        output_path=args.out, format=args.format,
    )
    problem = PinnedProblem(config.l, config.L)
    if config.samples < 2:
        raise ValueError("--samples must be at least 2")
    if config.format not in ("csv", "json", "svg"):
        raise ValueError(f"unknown format {config.format!r}")
    if not config.output_path:
        raise ValueError("--out is required for sample")
    cp = make_critical_point(problem, config.family, config.n, config.sign)
    curve = sample_curve(cp, config.samples)
    writer = {"csv": _write_csv, "json": _write_json, "svg": _write_svg}
    writer[config.format](config.output_path, curve)
    log.info("wrote %s (%d samples, %s)", config.output_path, config.samples,
             config.format)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    problem = _problem(args)
    points = enumerate_spectrum(problem, args.n_max)
    minimum = points[0].energy
    print(f"{'':2} {'family':6} {'n':>3} {'sign':5} {'p':>18} {'b':>23} "
          f"{'lambda':>23} {'energy':>23}")
    for cp in points:
        mark = "*" if cp.energy <= minimum * (1.0 + 1e-14) else " "
        print(f"{mark:2} {cp.family.value:6} {cp.n:3d} {cp.sign.value:5} "
              f"{cp.p.p:18.12f} {cp.b:23.12e} {cp.lam:23.12e} "
              f"{bending_energy(cp):23.12e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    problem = _problem(args)
    results = run_verification(problem, args.n_max,
                               inject_failure=args.inject_failure)
    failed = [c for c in results if not c.passed]
    for c in results:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:24s} {c.detail}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def cmd_minimize(args) -> int:
    problem = _problem(args)
    if args.m < 16:
        raise ValueError(f"m >= 16 required, got {args.m}")
    if not args.out:
        raise ValueError("--out is required for minimize")
    curve, report = discrete.minimize(problem, args.m, args.seed)
    discrete.write_polyline_csv(args.out, curve)
    payload = {
        "iterations": report.iterations,
        "final_energy": report.final_energy,
        "max_constraint_violation": report.max_constraint_violation,
        "hausdorff_to_reference": report.hausdorff_to_reference,
        "converged": report.converged,
    }
    report_path = args.report or (args.out + ".report.json")
    with open(report_path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    log.info("wrote %s and %s", args.out, report_path)
    if not report.converged:
        print(f"iteration cap reached after {report.iterations} steps "
              f"(report written)", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    print(f"converged in {report.iterations} iterations: "
          f"energy {_fmt(report.final_energy)}, "
          f"hausdorff/L {_fmt(report.hausdorff_to_reference / problem.L)}")
    return EXIT_OK


# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastica",
        description="Closed-form pinned elastic curves: solve moduli, sample "
                    "curves, rank the energy spectrum, verify the "
                    "classification, and cross-check with a discrete "
                    "minimizer.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--l", type=float, default=None,
                       help="endpoint distance (0 < l < L)")
        p.add_argument("--L", dest="L", type=float, default=None,
                       help="curve length")
        p.add_argument("--config", type=str, default=None,
                       help="optional key=value config file")

    p = sub.add_parser("solve", help="solve a family's modulus equation")
    common(p)
    p.add_argument("--family", choices=["hat", "check"], default=None)
    p.set_defaults(func=cmd_solve, merge={"l": float, "L": float,
                                          "family": str})

    p = sub.add_parser("sample", help="write one curve to csv/json/svg")
    common(p)
    p.add_argument("--family", choices=["hat", "check"], default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--sign", choices=["plus", "minus"], default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json", "svg"], default=None)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_sample,
                   merge={"l": float, "L": float, "family": str, "n": int,
                          "sign": str, "samples": int, "format": str,
                          "out": str})

    p = sub.add_parser("spectrum", help="rank all critical points by energy")
    common(p)
    p.add_argument("--n-max", type=int, default=None)
    p.set_defaults(func=cmd_spectrum, merge={"l": float, "L": float,
                                             "n_max": int})

    p = sub.add_parser("verify", help="run the invariant battery")
    common(p)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--inject-failure", type=str, default=None,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify, merge={"l": float, "L": float,
                                           "n_max": int})

    p = sub.add_parser("minimize", help="discrete gradient-descent cross-check")
    common(p)
    p.add_argument("--m", type=int, default=None, help="vertex count (>= 16)")
    p.add_argument("--seed", type=str, default=None,
                   help="arc-up | arc-down | random:<key>")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--report", type=str, default=None,
                   help="report path (default: <out>.report.json)")
    p.set_defaults(func=cmd_minimize,
                   merge={"l": float, "L": float, "m": int, "seed": str,
                          "out": str, "report": str})

    return parser


_DEFAULTS = {"n": 0, "sign": "plus", "samples": 1024, "format": "csv",
             "family": "hat", "n_max": 4, "m": 200, "seed": "arc-up"}


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        _merge_config(args, args.merge)
        for key in args.merge:
            if getattr(args, key, None) is None and key in _DEFAULTS:
                setattr(args, key, _DEFAULTS[key])
        return args.func(args)
    except (ValueError, EllipticDomainError) as exc:
        log.debug("domain error", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except discrete.ProjectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
