"""Command-line front end.

    bilex extend      --curve C --grid x0:x1:dx,y0:y1:dy [--out grid.csv]
    bilex audit       --curve C [--grid ...] [--samples N] [--seed S] [--report r.json]
    bilex verify      --suite lemmas|constants|invariance --curve C [--walks N] [--seed S]
    bilex export-grid --curve C --grid ... [--out lines.csv]

``--curve`` is a curve JSON file or one of the built-in names
(identity, bend, affine, zigzag).  Exit codes: 0 success, 1 a check failed,
2 bad usage or configuration, 3 the numerical engine failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import audit, conformal
from . import curve as cv
from .errors import (EngineAccuracyError, InvalidCurveError, InversionError, QuadratureError,
                     UsageError)
from .extension import F_diagnostics, F_eval, build_extension, linear_conjugation_check, normalization_check

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_ENGINE = 0, 1, 2, 3

BUILTIN = {
    "identity": cv.identity_curve,
    "bend": cv.bend_curve,
    "affine": cv.affine_curve,
    "zigzag": cv.zigzag_curve,
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    curve: str
    grid: audit.GridSpec | None
    samples: int
    walks: int
    seed: int
    tol: float
    out: str | None
    report: str | None
    suite: str | None = None

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        grid = audit.GridSpec.parse(ns.grid) if ns.grid else None
        if ns.samples < 1 or ns.walks < 1:
            raise UsageError("sample and walk counts must be positive")
        if not ns.tol > 0:
            raise UsageError("--tol must be positive")
        return cls(ns.command, ns.curve, grid, ns.samples, ns.walks, ns.seed, ns.tol, ns.out,
                   ns.report, getattr(ns, "suite", None))


def load_curve_arg(spec: str) -> cv.PolylineEmbedding:
    if spec in BUILTIN:
        return BUILTIN[spec]()
    try:
        return cv.load_curve(spec)
    except FileNotFoundError:
        raise UsageError(f"no such curve file or built-in curve: {spec!r}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{spec}: invalid JSON ({exc})") from None


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_extend(cfg: RunConfig) -> int:
    if cfg.grid is None:
        raise UsageError("extend needs --grid")
    c = load_curve_arg(cfg.curve)
    F = build_extension(c)
    z = cfg.grid.points()
    z = z[z.imag != 0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "Fx", "Fy", "normDF", "normDFinv"])
    if z.size:
        d = F_diagnostics(F, z)
        for zz, fz, a, b in zip(z, d.F, d.norm_DF, d.norm_DF_inv):
            w.writerow([_fmt(zz.real), _fmt(zz.imag), _fmt(fz.real), _fmt(fz.imag), _fmt(a), _fmt(b)])
    _write(buf.getvalue(), cfg.out)
    return EXIT_OK


def cmd_export_grid(cfg: RunConfig) -> int:
    """Images of the grid lines, finely sampled, for plotting the deformed grid."""
    if cfg.grid is None:
        raise UsageError("export-grid needs --grid")
    c = load_curve_arg(cfg.curve)
    F = build_extension(c)
    xs, ys = cfg.grid.axes()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "index", "x", "y", "Fx", "Fy"])
    fine_x = np.linspace(xs[0], xs[-1], 10 * len(xs) + 1)
    fine_y = np.linspace(ys[0], ys[-1], 10 * len(ys) + 1)
    for i, y in enumerate(ys):
        pts = fine_x + 1j * y
        for p, fp in zip(pts, np.atleast_1d(F_eval(F, pts))):
            w.writerow(["h", i, _fmt(p.real), _fmt(p.imag), _fmt(fp.real), _fmt(fp.imag)])
    for i, x in enumerate(xs):
        pts = x + 1j * fine_y
        for p, fp in zip(pts, np.atleast_1d(F_eval(F, pts))):
            w.writerow(["v", i, _fmt(p.real), _fmt(p.imag), _fmt(fp.real), _fmt(fp.imag)])
    _write(buf.getvalue(), cfg.out)
    return EXIT_OK


def _emit_report(report: dict, cfg: RunConfig) -> int:
    text = audit.dumps_report(report) + "\n"
    _write(text, cfg.report if cfg.report else cfg.out)
    failed = [ch["name"] for ch in report["checks"] if not ch["pass"]]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _constants_block(c):
    return {"L": c.lip_upper, "l": c.lip_lower, "Lp_bound": 2000.0 * c.lip_upper,
            "lp_bound": c.lip_lower / 120.0}


def cmd_audit(cfg: RunConfig) -> int:
    c = load_curve_arg(cfg.curve)
    F = build_extension(c)
    rep = audit.distortion_audit(F, cfg.grid, cfg.samples, cfg.seed).to_json()
    if c.name == "bend":
        rep["checks"].append(audit.example2_obstruction_check(F))
    return _emit_report(rep, cfg)


def _lemma_checks(c, cfg):
    checks = []
    for label, curve in (("upper", c), ("lower", cv.mirror(c))):
        m = conformal.build_phi(curve)
        for chk in (audit.harm1_audit(m, curve, cfg.samples, cfg.seed),
                    audit.koebe_audit(m, cfg.samples, cfg.seed)):
            chk["name"] = f"{chk['name']}[{label}]"
            checks.append(chk)
    zeta = 0.3 + 1.0j
    x, y = zeta.real, zeta.imag
    for name, E, stated in (("angle1", [(-math.inf, x - y)], 0.25),
                           ("angle2", [(x - y, x - y / 2)], 1 / 12)):
        est = audit.harmonic_measure_mc("halfplane", zeta, E, cfg.walks, cfg.seed)
        exact = audit.halfplane_harmonic_measure(zeta, E)
        checks.append({"name": name, "pass": bool(est.brackets(exact)),
                       "margin": float(3 * est.stderr - abs(est.value - exact)),
                       "details": {"estimate": est.value, "stderr": est.stderr, "exact": exact,
                                   "stated": stated, "stated_within_3sigma": bool(est.brackets(stated)),
                                   "stated_is_lower_bound": bool(exact >= stated)}})
    for zeta, rho in ((2j, 1.0), (0.5j, 1.0), (1 + 1j, 3.0), (-2 + 0.5j, 1.0)):
        exact = audit.halfplane_harmonic_measure(zeta, [(-rho, rho)])
        checks.append(audit.bn_bounds_check("halfplane", zeta, rho, exact))
    return checks


def _invariance_checks(c, cfg):
    checks = []
    for r, s, rp, sp in ((2.0, 0.0, 1.0, 0.0), (1.0, 1.0, 1j, 0.0), (0.5, -0.3, 2 - 1j, 1 + 1j)):
        dev = linear_conjugation_check(c, r, s, rp, sp)
        checks.append({"name": f"conjugation[r={r},s={s},r'={rp},s'={sp}]",
                       "pass": bool(dev["max"] < cfg.tol), "margin": float(cfg.tol - dev["max"]),
                       "details": dev})
    norm = (2.0, 0.5) if c.n == 0 else (-2.0, 3.0)
    dev = normalization_check(c, norm)
    checks.append({"name": "normalization", "pass": bool(dev < cfg.tol), "margin": float(cfg.tol - dev),
                   "details": {"deviation": dev, "normalization": list(norm)}})
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    c = load_curve_arg(cfg.curve)
    if cfg.suite == "constants":
        rows = audit.constants_check()
        checks = [{"name": r["name"], "pass": r["pass"], "margin": abs(r["reference"] - r["value"]),
                   "details": r} for r in rows]
    elif cfg.suite == "lemmas":
        checks = _lemma_checks(c, cfg)
    elif cfg.suite == "invariance":
        checks = _invariance_checks(c, cfg)
    else:
        raise UsageError(f"unknown suite {cfg.suite!r}")
    rep = {"curve": c.name, "seed": cfg.seed, "suite": cfg.suite, "checks": checks,
           "constants": _constants_block(c)}
    return _emit_report(rep, cfg)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", required=True, help="curve JSON file or built-in name")
    common.add_argument("--grid", help="x0:x1:dx,y0:y1:dy")
    common.add_argument("--samples", type=int, default=1000, help="random points / pairs")
    common.add_argument("--walks", type=int, default=100_000, help="Monte Carlo walks")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-5, help="tolerance for invariance checks")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--report", help="report JSON path")

    p = argparse.ArgumentParser(prog="bilex", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("extend", parents=[common], help="evaluate F and its distortion on a grid")
    sub.add_parser("audit", parents=[common], help="distortion audit")
    v = sub.add_parser("verify", parents=[common], help="lemma, constant and invariance suites")
    v.add_argument("--suite", required=True, choices=["lemmas", "constants", "invariance"])
    sub.add_parser("export-grid", parents=[common], help="images of grid lines")
    return p


COMMANDS = {"extend": cmd_extend, "audit": cmd_audit, "verify": cmd_verify, "export-grid": cmd_export_grid}


def _glue_grid(argv):
    # grids such as "-1:1:0.5,..." start with a dash and would be read as flags
    out = []
    it = iter(argv)
    for a in it:
        if a == "--grid":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--grid={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parser.parse_args(_glue_grid(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, InvalidCurveError) as exc:
        print(f"bilex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EngineAccuracyError, InversionError, QuadratureError) as exc:
        print(f"bilex: numerical failure: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
