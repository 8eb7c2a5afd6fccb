"""Command-line entry point: figure datasets as CSV plus an oracle cross-check.

Every command writes ``# `` comment lines with the full parameter set first,
then plain CSV with 15 significant digits, so identical flags give identical
bytes.  Exit status: 0 success, 2 invalid input, 3 numerical tolerance not met.
"""

from __future__ import annotations

import argparse
import io
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .darkport import DarkPortParams, dark_distribution, dark_moments, kappa, optimal_r
from .disentangle import reconstruct_residual, solve
from .distribution import (
    BeamSplitterParams,
    auto_grid,
    full_grid,
    marginal,
    no_entangle_grid,
)
from .errors import BsNoiseError
from .numerics import CoherentParam, SqueezeParam
from .oracle import simulate, write_golden
from .svg import line_plot

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TOLERANCE = 3

RESIDUAL_TOL = 1e-10


class ToleranceFailure(Exception):
    """A computed result missed its numerical tolerance."""


_ANGLE_RE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*(pi)?\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from ``0.7``, ``pi``, ``pi/4``, ``3pi/8``, ``-pi/3``, ``2*pi``."""
    m = _ANGLE_RE.match(str(text))
    if not m or not (m.group(2) or m.group(3)):
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}")
    sign, coef, pi, denom = m.groups()
    value = float(coef) if coef else 1.0
    if pi:
        value *= math.pi
    if denom:
        value /= float(denom)
    return -value if sign == "-" else value


def parse_list(conv):
    def parse(text: str):
        try:
            return [conv(item) for item in str(text).split(",") if item.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(f"bad list {text!r}: {exc}")
    return parse


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.15g" % float(v)


class CsvWriter:
    def __init__(self, command: str, params: dict):
        self.buf = io.StringIO()
        self.buf.write(f"# bsnoise {__version__} {command}\n")
        for key in sorted(params):
            self.buf.write(f"# {key}={params[key]}\n")

    def comment(self, text: str):
        self.buf.write(f"# {text}\n")

    def header(self, *cols):
        self.buf.write(",".join(cols) + "\n")

    def row(self, *vals):
        self.buf.write(",".join(_fmt(v) for v in vals) + "\n")

    def emit(self, out):
        text = self.buf.getvalue()
        if out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(out, "w", newline="\n") as fh:
                fh.write(text)


def _param_record(args, names) -> dict:
    rec = {}
    for name in names:
        v = getattr(args, name)
        if isinstance(v, list):
            v = ";".join(_fmt(x) for x in v)
        elif isinstance(v, float):
            v = _fmt(v)
        rec[name] = v
    return rec


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# -- commands ----------------------------------------------------------------

def cmd_disentangle_sweep(args) -> int:
    if args.gamma_steps < 2 or args.r_steps < 2:
        raise ValueError("gamma-steps and r-steps must be >= 2")
    if not args.r_max >= 0:
        raise ValueError("r-max must be >= 0")
    gammas = np.linspace(0.0, math.pi / 2, args.gamma_steps)
    rs = np.linspace(0.0, args.r_max, args.r_steps)

    def column(g):
        return [(g, r, solve(g, r)) for r in rs]

    rows = [row for col in _pmap(column, gammas, args.threads) for row in col]
    w = CsvWriter("disentangle-sweep", _param_record(args, ["gamma_steps", "r_steps", "r_max"]))
    w.header("gamma", "r", "sigma1", "sigma2", "sigmaS", "sigmaT", "residual")
    worst = 0.0
    for g, r, c in rows:
        res = reconstruct_residual(c, g, r)
        worst = max(worst, res)
        w.row(g, r, c.sigma1, c.sigma2, c.sigmaS, c.sigmaT, res)
    w.emit(args.out)
    if args.svg:
        last = [(g, c) for g, r, c in rows if r == rs[-1]]
        line_plot(
            args.svg,
            [(name, [g for g, _ in last], [getattr(c, name) for _, c in last])
             for name in ("sigma1", "sigma2", "sigmaS", "sigmaT")],
            title=f"disentangling coefficients, r={rs[-1]:g}", xlabel="gamma",
        )
    if worst > RESIDUAL_TOL:
        raise ToleranceFailure(f"max residual {worst:.3e} > {RESIDUAL_TOL:.0e}")
    return EXIT_OK


def _check_dist_args(args):
    if not args.alpha_sq >= 0:
        raise ValueError("alpha-sq must be >= 0")
    if any(not r >= 0 for r in args.r_list):
        raise ValueError("every r must be >= 0")
    if not args.r_list:
        raise ValueError("r-list is empty")


def cmd_dist(args) -> int:
    _check_dist_args(args)
    if args.grid is not None and (len(args.grid) != 2 or min(args.grid) < 0):
        raise ValueError("grid must be two nonnegative integers N1,N2")
    alpha = CoherentParam(math.sqrt(args.alpha_sq), args.phi)

    def run(r):
        params = BeamSplitterParams.build(alpha, SqueezeParam(r, args.theta), args.gamma)
        if args.grid:
            n1, n2 = args.grid
            full = full_grid(params, n1, n2, args.norm_tol)
            base = no_entangle_grid(params, n1, n2, args.norm_tol) if args.baseline else None
        else:
            full = auto_grid(params, args.norm_tol)
            base = auto_grid(params, args.norm_tol, entangle=False) if args.baseline else None
        return r, full, base

    results = _pmap(run, args.r_list, args.threads)
    rec = _param_record(args, ["alpha_sq", "gamma", "theta", "phi", "r_list", "norm_tol"])
    rec["baseline"] = bool(args.baseline)
    rec["port"] = args.port
    w = CsvWriter("dist", rec)
    cols = ["r", "n", "probability"] + (["baseline_probability"] if args.baseline else [])
    w.header(*cols)
    summary = []
    for r, full, base in results:
        m = marginal(full, args.port)
        mb = marginal(base, args.port) if base is not None else None
        for n, p in enumerate(m.probs):
            extra = []
            if mb is not None:
                extra = [mb.probs[n] if n < mb.probs.size else 0.0]
            w.row(r, n, p, *extra)
        summary.append((r, m, mb, full))
    w.comment("summary")
    scols = ["r", "mean", "variance", "truncation_defect", "n1_max", "n2_max"]
    if args.baseline:
        scols += ["baseline_mean", "baseline_variance"]
    w.header(*scols)
    for r, m, mb, full in summary:
        extra = [mb.mean, mb.variance] if mb is not None else []
        w.row(r, m.mean, m.variance, full.truncation_defect, full.n1_max, full.n2_max, *extra)
    w.emit(args.out)
    if args.svg:
        series = [(f"r={r:g}", list(range(m.probs.size)), list(m.probs)) for r, m, _, _ in summary]
        if args.baseline:
            series += [(f"r={r:g} no-ent", list(range(mb.probs.size)), list(mb.probs))
                       for r, _, mb, _ in summary]
        line_plot(args.svg, series, title=f"port {args.port}", xlabel="n", ylabel="P(n)")
    return EXIT_OK


def cmd_darkport(args) -> int:
    if not args.alpha_delta_sq >= 0:
        raise ValueError("alpha-delta-sq must be >= 0")
    if any(not r >= 0 for r in args.r_list) or not args.r_list:
        raise ValueError("r-list must be a nonempty list of values >= 0")
    # theta - 2 phi = angle with phi = 0
    rows = []
    for r in args.r_list:
        p = DarkPortParams(args.alpha_delta_sq, SqueezeParam(r, args.angle))
        rows.append((r, dark_distribution(p, norm_tol=args.norm_tol), dark_moments(p)))
    w = CsvWriter("darkport", _param_record(args, ["alpha_delta_sq", "angle", "r_list", "norm_tol"]))
    w.header("r", "n", "probability")
    for r, d, _ in rows:
        for n, p in enumerate(d.probs):
            w.row(r, n, p)
    w.comment("moments")
    w.header("r", "mean", "variance", "analytic_mean", "analytic_variance",
             "mean_rel_err", "variance_rel_err")
    worst = 0.0
    for r, d, (m, v) in rows:
        em = abs(d.mean - m) / m if m else abs(d.mean)
        ev = abs(d.variance - v) / v if v else abs(d.variance)
        worst = max(worst, em, ev)
        w.row(r, d.mean, d.variance, m, v, em, ev)
    w.emit(args.out)
    if args.svg:
        line_plot(args.svg, [(f"r={r:g}", list(range(d.probs.size)), list(d.probs))
                             for r, d, _ in rows], title="dark port", xlabel="n", ylabel="P(n)")
    if worst > args.moment_tol:
        raise ToleranceFailure(f"moment mismatch {worst:.3e} > {args.moment_tol:.0e}")
    return EXIT_OK


def cmd_kappa(args) -> int:
    if args.r_steps < 2 or not args.r_max >= 0:
        raise ValueError("r-steps must be >= 2 and r-max >= 0")
    rs = np.linspace(0.0, args.r_max, args.r_steps)
    w = CsvWriter("kappa", _param_record(args, ["r_max", "r_steps", "angles"]))
    w.header("angle", "r", "kappa_mod", "lambda")
    series = []
    for ang in args.angles:
        ks = [kappa(r, ang) for r in rs]
        for r, k in zip(rs, ks):
            w.row(ang, r, k.modulus, k.phase)
        series.append((f"{ang:.4g}", list(rs), [k.modulus for k in ks]))
    w.emit(args.out)
    if args.svg:
        line_plot(args.svg, series, title="|kappa|", xlabel="r")
    return EXIT_OK


def cmd_optimal(args) -> int:
    if not 0 < args.min < args.max or args.points < 2:
        raise ValueError("need 0 < min < max and points >= 2")
    grid = np.geomspace(args.min, args.max, args.points)
    rs = [optimal_r(a) for a in grid]
    w = CsvWriter("optimal", _param_record(args, ["min", "max", "points"]))
    w.header("alpha_delta_sq", "r_opt")
    for a, r in zip(grid, rs):
        w.row(a, r)
    w.emit(args.out)
    if args.svg:
        line_plot(args.svg, [("r*", list(grid), rs)], title="optimal squeezing",
                  xlabel="|alpha delta|^2", ylabel="r*", logx=True)
    if any(b < a for a, b in zip(rs, rs[1:])):
        raise ToleranceFailure("optimal r is not nondecreasing")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if not args.alpha_sq >= 0 or not args.r >= 0 or args.cutoff < 1:
        raise ValueError("need alpha-sq >= 0, r >= 0, cutoff >= 1")
    alpha = CoherentParam(math.sqrt(args.alpha_sq), args.phi)
    zeta = SqueezeParam(args.r, args.theta)
    ref = simulate(alpha, zeta, args.gamma, args.cutoff)
    params = BeamSplitterParams.build(alpha, zeta, args.gamma)
    c = args.cutoff
    # the engine is asked for the same box; its mass outside is not a failure here
    eng = full_grid(params, c, c, norm_tol=1.0)
    n = np.arange(c + 1)
    tri = (n[:, None] + n[None, :]) <= c
    diff = np.where(tri, np.abs(eng.probs - ref.probs), 0.0)
    worst = float(diff.max())
    rec = _param_record(args, ["alpha_sq", "r", "theta", "phi", "gamma", "cutoff", "tol"])
    w = CsvWriter("oracle-check", rec)
    w.comment(f"max_abs_deviation={_fmt(worst)}")
    w.comment(f"oracle_truncation_defect={_fmt(ref.truncation_defect)}")
    w.header("n1", "n2", "engine", "oracle", "abs_diff")
    for i in range(c + 1):
        for j in range(c + 1 - i):
            w.row(i, j, eng.probs[i, j], ref.probs[i, j], diff[i, j])
    w.emit(args.out)
    if args.golden:
        write_golden(args.golden, ref)
    status = "PASS" if worst <= args.tol else "FAIL"
    print(f"oracle-check {status}: max |engine - oracle| = {worst:.3e} (tol {args.tol:.1e})",
          file=sys.stderr)
    if worst > args.tol:
        raise ToleranceFailure(f"deviation {worst:.3e} > {args.tol:.1e}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    shared.add_argument("--config", help="flat 'key = value' file; flags override it")
    shared.add_argument("--svg", help="also draw a simple SVG plot here")
    shared.add_argument("--norm-tol", type=float, default=1e-6,
                        help="allowed missing probability on a grid")
    shared.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="bsnoise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bsnoise {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disentangle-sweep", parents=[shared],
                       help="disentangling coefficients over (gamma, r)")
    p.add_argument("--gamma-steps", type=int, default=101)
    p.add_argument("--r-steps", type=int, default=61)
    p.add_argument("--r-max", type=float, default=1.5)
    p.set_defaults(func=cmd_disentangle_sweep)

    p = sub.add_parser("dist", parents=[shared], help="output-port photon distributions")
    p.add_argument("--alpha-sq", type=float, default=20.0)
    p.add_argument("--gamma", type=parse_angle, default=math.pi / 4)
    p.add_argument("--r-list", type=parse_list(float), default=[0.0, 0.3, 0.5, 0.7, 1.0, 1.5])
    p.add_argument("--theta", type=parse_angle, default=0.0)
    p.add_argument("--phi", type=parse_angle, default=0.0)
    p.add_argument("--port", type=int, choices=(1, 2), default=1)
    p.add_argument("--grid", type=parse_list(int), default=None,
                   help="fixed N1,N2 grid bounds (default: grown automatically)")
    p.add_argument("--baseline", action="store_true",
                   help="add the result without the entangling factors")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("darkport", parents=[shared], help="dark-port distributions")
    p.add_argument("--alpha-delta-sq", type=float, default=20.0)
    p.add_argument("--r-list", type=parse_list(float), default=[0.0, 0.3, 0.6, 0.9, 1.2, 1.5])
    p.add_argument("--angle", type=parse_angle, default=0.0, help="theta - 2 phi")
    p.add_argument("--moment-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_darkport, norm_tol=1e-9)

    p = sub.add_parser("kappa", parents=[shared], help="|kappa| and its phase")
    p.add_argument("--r-max", type=float, default=1.5)
    p.add_argument("--r-steps", type=int, default=151)
    p.add_argument("--angles", type=parse_list(parse_angle),
                   default=[0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi])
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("optimal", parents=[shared], help="optimal dark-port squeezing")
    p.add_argument("--min", type=float, default=1.0)
    p.add_argument("--max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=50)
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("oracle-check", parents=[shared],
                       help="compare the series engine with brute-force simulation")
    p.add_argument("--alpha-sq", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.3)
    p.add_argument("--theta", type=parse_angle, default=0.0)
    p.add_argument("--phi", type=parse_angle, default=0.0)
    p.add_argument("--gamma", type=parse_angle, default=math.pi / 8)
    p.add_argument("--cutoff", type=int, default=24)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--golden", help="also write the oracle table as a golden file")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults so explicit flags win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in values.items():
        if key not in known or key in ("config", "help"):
            raise ValueError(f"unknown config key {key!r} for {args.command}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(text) if action.type else text
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    except (OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ToleranceFailure, BsNoiseError) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
