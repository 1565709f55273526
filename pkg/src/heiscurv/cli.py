"""Command line entry point.

Every subcommand reads a JSON norm spec (``{"kind": ..., "params": ...}``,
given as a path or inline), writes CSV or JSON to ``--output`` (atomically) or
stdout, and echoes a one-line summary on stderr.  Exit codes: 0 success,
2 check failure, 1 malformed input or numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .config import RunConfig
from .curvature import (AffineNormError, CurvatureError, PrescriptionError, curvature_exponent,
                        hfamily_values, mcp_ratio_check, prescribe_exponent, rigidity_probe)
from .geometry import GeodesicParams, HeisPoint, InversionError, exp_coords, inverse_exp, jacobian_parts
from .norms import NormError, NormSpec, build_norm
from .trig import TrigError, TrigTable, cos_sin, cos_sin_polar

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    def __init__(self, message, usage=""):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


# output ------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def format_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def format_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in np.atleast_2d(np.asarray(rows, dtype=float)):
        lines.append(",".join("%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".heiscurv-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str, summary: str) -> None:
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
    print(summary, file=sys.stderr)


# inputs ------------------------------------------------------------------

def load_spec(arg: str) -> NormSpec:
    text = arg.strip()
    if not text.startswith("{"):
        with open(arg) as fh:
            text = fh.read()
    return NormSpec.from_json(text)


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return cfg.update(resolution=args.resolution, threads=args.threads, output=args.output)


def _table(args, cfg) -> TrigTable:
    return TrigTable(build_norm(load_spec(args.norm)), cfg.resolution)


def _grid(text: str) -> tuple[int, int]:
    try:
        s, r = text.lower().split("x")
        return int(s), int(r)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like SxR, e.g. 512x1024")


# subcommands -------------------------------------------------------------

def cmd_trig(args, cfg):
    table = _table(args, cfg)
    phi = 2.0 * table.pi_polar * np.arange(args.n) / args.n
    theta = table.ccirc(phi)
    cs = cos_sin(table, theta)
    csp = cos_sin_polar(table, phi)
    rows = np.column_stack([theta, cs[:, 0], cs[:, 1], phi, csp[:, 0], csp[:, 1], theta,
                            table.ccirc_prime(phi)])
    header = ["theta", "cosOmega", "sinOmega", "phi", "cosPolar", "sinPolar", "Ccirc", "CcircPrime"]
    _emit(args, format_csv(header, rows),
          f"trig: {args.n} rows, pi_omega={table.pi_omega:.12g}, pi_polar={table.pi_polar:.12g}")
    return EXIT_OK


def cmd_geodesic(args, cfg):
    table = _table(args, cfg)
    p = GeodesicParams(args.r, args.phi, args.omega)
    p.validate(table)
    t = np.linspace(0.0, args.t_max, args.k + 1)
    x, y, z = exp_coords(table, p.r, p.phi, p.omega, t)
    _emit(args, format_csv(["t", "x", "y", "z"], np.column_stack([t, x, y, z])),
          f"geodesic: endpoint ({x[-1]:.12g}, {y[-1]:.12g}, {z[-1]:.12g})")
    return EXIT_OK


def cmd_jacobian(args, cfg):
    table = _table(args, cfg)
    per = 2.0 * table.pi_polar
    phis = np.array([args.phi]) if args.phi is not None else per * np.arange(args.n_phi) / args.n_phi
    k = np.arange(1, args.n_omega + 1)
    omegas = per * (2.0 * k / (args.n_omega + 1) - 1.0)
    pg, og = np.meshgrid(phis, omegas, indexing="ij")
    j, dj = jacobian_parts(table, pg, og)
    rows = np.column_stack([pg.ravel(), og.ravel(), j.ravel(), dj.ravel()])
    _emit(args, format_csv(["phi", "omega", "JR", "dJR"], rows),
          f"jacobian: {rows.shape[0]} rows, min JR={np.min(j):.6g}")
    return EXIT_OK


def cmd_ncurv(args, cfg):
    if args.band is not None:
        cfg = cfg.update(band=args.band)
    table = _table(args, cfg)
    report = curvature_exponent(table, cfg, grid=args.grid, cross_check=args.cross_check)
    _emit(args, format_json(report.to_dict()),
          f"ncurv: N_curv={report.n_curv:.10g} at phi={report.argmax[0]:.6g}, omega={report.argmax[1]:.6g}")
    return EXIT_OK


def cmd_mcp(args, cfg):
    table = _table(args, cfg)
    res = mcp_ratio_check(table, args.N, cfg)
    _emit(args, format_json(res.to_dict()),
          f"mcp: N={args.N:g} {'pass' if res.passed else 'fail'}, min slack {res.min_slack:.3e}")
    return EXIT_OK if res.passed else EXIT_CHECK


def cmd_rigidity(args, cfg):
    table = _table(args, cfg)
    try:
        w = rigidity_probe(table, args.h, cfg)
    except AffineNormError as exc:
        _emit(args, format_json({"status": "affine", "message": str(exc)}), f"rigidity: refused, {exc}")
        return EXIT_CHECK
    except CurvatureError as exc:
        _emit(args, format_json({"status": "no_witness", "message": str(exc)}), f"rigidity: {exc}")
        return EXIT_CHECK
    _emit(args, format_json(w.to_dict()),
          f"rigidity: ratio {w.ratio:.6g} < r^4 = {w.r4_threshold:.6g} at r={w.r_violation:.6g}"
          f" ({'verified' if w.verified else 'NOT verified'})")
    return EXIT_OK if w.verified else EXIT_CHECK


def cmd_prescribe(args, cfg):
    try:
        res = prescribe_exponent(args.target, args.q, args.tol, cfg)
    except PrescriptionError as exc:
        _emit(args, format_json({"status": "no_bracket", "message": str(exc),
                                 "profile": [list(p) for p in exc.profile]}), f"prescribe: {exc}")
        return EXIT_CHECK
    ok = abs(res.report.n_curv - args.target) <= args.tol
    _emit(args, format_json(res.to_dict()),
          f"prescribe: t_star={res.t_star:.10g}, N_curv={res.report.n_curv:.10g}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_hfamily(args, cfg):
    y = np.arange(1, args.n + 1) / (args.n * args.h)
    v = hfamily_values(args.h, y)
    rows = np.column_stack([y, v.jr, v.wdjr, v.ratio])
    _emit(args, format_csv(["y", "JR", "wdJR", "ratio"], rows),
          f"hfamily: h={args.h}, ratio at y=1/h is {v.ratio[-1]:.10g}")
    return EXIT_OK


def cmd_distance(args, cfg):
    table = _table(args, cfg)
    res = inverse_exp(table, HeisPoint(*args.to), tol=args.tol)
    _emit(args, format_json(res.to_dict()),
          f"distance: d={res.distance:.15g}, residual {res.residual:.3e}")
    return EXIT_OK


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file overriding solver defaults")
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--resolution", type=int, help="cells of the trig table")
    common.add_argument("--threads", type=int, help="worker threads for sweeps")

    parser = _Parser(prog="heiscurv", description="Curvature exponents of sub-Finsler Heisenberg groups.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name, func, help_, norm=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        if norm:
            p.add_argument("--norm", required=True, help="norm spec JSON (path or inline)")
        p.set_defaults(func=func)
        return p

    p = add("trig", cmd_trig, "table of generalized trigonometric functions (CSV)")
    p.add_argument("--n", type=int, default=256, help="number of rows")

    p = add("geodesic", cmd_geodesic, "sampled geodesic (CSV)")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--k", type=int, default=64, help="number of time steps")
    p.add_argument("--t-max", type=float, default=1.0)

    p = add("jacobian", cmd_jacobian, "reduced Jacobian and its omega derivative (CSV)")
    p.add_argument("--phi", type=float, help="single dual angle instead of a grid")
    p.add_argument("--n-phi", type=int, default=16)
    p.add_argument("--n-omega", type=int, default=63)

    p = add("ncurv", cmd_ncurv, "curvature exponent (JSON)")
    p.add_argument("--grid", type=_grid, help="sweep grid SxR")
    p.add_argument("--band", type=float, help="excluded band width near r = 0, 1")
    p.add_argument("--cross-check", action="store_true", help="also bisect the ratio test")

    p = add("mcp", cmd_mcp, "ratio test for MCP(0, N) (JSON)")
    p.add_argument("--N", type=float, required=True)

    p = add("rigidity", cmd_rigidity, "witness that MCP(0, 5) fails (JSON)")
    p.add_argument("--h", type=float, default=0.5, help="largest second-difference step")

    p = add("prescribe", cmd_prescribe, "interpolation parameter with a given exponent (JSON)", norm=False)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--q", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=0.01)

    p = add("hfamily", cmd_hfamily, "closed-form ratio along the h-family arc (CSV)", norm=False)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--n", type=int, default=64, help="rows; the last row is y = 1/h")

    p = add("distance", cmd_distance, "geodesic parameters and distance to a point (JSON)")
    p.add_argument("--to", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--tol", type=float, default=1e-12)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand", parser.format_usage())
        cfg = _config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(exc.usage.rstrip(), file=sys.stderr)
        print(f"heiscurv: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (NormError, TrigError, CurvatureError, InversionError, ValueError,
            OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"heiscurv: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
