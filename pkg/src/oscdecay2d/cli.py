"""Command-line front end: reproducible CSV output for every operation."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from . import bounds, funcspec, measure, newton, oscillate
from .funcspec import Direction, Overall, Ray, SpecError, Strip


def _fmt(x) -> str:
    """Decimal formatting at 12 significant digits (diff-able goldens)."""
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.12g}"


def _load_spec(path: str) -> funcspec.MultiplierSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return funcspec.parse_spec(fh.read())


def _emit(lines, out: Optional[str]):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _mass_tol(args) -> float:
    env = os.environ.get("OSCDECAY_TOL")
    if args.tol is not None:
        return args.tol
    return float(env) if env else 1e-6

def _kernel_tol(args) -> float:
    env = os.environ.get("OSCDECAY_TOL")
    if args.tol is not None:
        return args.tol
    return float(env) if env else 1e-4


def cmd_newton(args) -> int:
    spec = _load_spec(args.spec)
    lines = []
    for i, f in enumerate(spec.factors):
        poly = newton.newton_polygon(f.poly)
        verts = " ".join(f"({v[0]},{v[1]})" for v in poly.vertices)
        lines.append(f"factor {i}: {f.poly.expr()}")
        lines.append(f"  vertices: {verts}")
        for slope, (v1, v2) in poly.edges:
            lines.append(f"  edge: slope {slope} from ({v1[0]},{v1[1]}) "
                         f"to ({v2[0]},{v2[1]})")
    dirs = newton.root_directions(spec)
    lines.append("root directions (radians): " +
                 (" ".join(_fmt(d.angle) for d in dirs) if dirs else "none"))
    _emit(lines, args.output)
    return 0


def cmd_resolve(args) -> int:
    spec = _load_spec(args.spec)
    res = newton.resolve_spec(spec, eta=args.eta, deriv_cap=args.deriv_cap)
    rng = np.random.default_rng(args.seed)
    lines = [
        f"slivers: {len(res.slivers)}",
        f"x_max: {_fmt(res.x_max)}  (geometric radius {_fmt(res.a_geom)})",
        f"splitting slopes: {res.s_pos}, -{res.s_neg}",
    ]
    area = sum(s.area() for s in res.slivers)
    lines.append(f"total chart area: {_fmt(area)} vs covered {_fmt(res.covered_area())}")
    mc = _mc_area(res, rng)
    lines.append(f"Monte-Carlo covered-area check (seed {args.seed}): {_fmt(mc)}")
    for note in res.notes:
        lines.append(f"note: {note}")
    for s in res.slivers:
        models = "; ".join(
            f"d={_fmt(m.d)},alpha={m.alpha},beta={m.beta}" for m in s.per_factor)
        lines.append(
            f"{s.ident} [{s.triangle.describe()}] ysign={s.ysign:+d} "
            f"shift={s.shift.expr()} lower={s.lower.expr()} upper={s.upper.expr()} "
            f"weight={s.region_weight}" + (f" | {models}" if models else ""))
    _emit(lines, args.output)
    if args.csv:
        rows = ["sliver,reflection,k_leading,alpha,beta,d,x_max"]
        for s in res.slivers:
            lead = s.shift.leading()
            klead = "0" if lead is None else f"{_fmt(lead[1])}*x^{lead[0]}"
            if not s.per_factor:
                rows.append(f"{s.ident},{s.reflection},{klead},,,,{_fmt(s.x_max)}")
            for m in s.per_factor:
                rows.append(f"{s.ident},{s.reflection},{klead},{m.alpha},"
                            f"{m.beta},{_fmt(m.d)},{_fmt(s.x_max)}")
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
    return 0


def _mc_area(res, rng) -> float:
    H = 1.05 * res.covered_reach()
    n = 20000
    pts = rng.uniform(-H, H, size=(n, 2))
    from .measure import _covered_mask
    inside = _covered_mask(res, pts[:, 0], pts[:, 1], res.x_max)
    return float(np.mean(inside) * (2 * H) ** 2)


def cmd_mass(args) -> int:
    spec = _load_spec(args.spec)
    tol = _mass_tol(args)
    radii = np.geomspace(args.rmax, args.rmin, args.samples)
    vals = []
    if args.mode == "disk":
        for r in radii:
            vals.append(measure.disk_mass(spec, float(r), tol))
    else:
        v = Direction(args.theta)
        res = newton.resolve_spec(spec)
        c = args.c if args.c is not None else res.a_geom / 2
        for r in radii:
            vals.append(measure.strip_mass(spec, v, float(r), c, tol))
    fit = measure.fit_exponents(list(zip(radii, vals)))
    lines = ["r,value"]
    for r, vv in zip(radii, vals):
        lines.append(f"{_fmt(r)},{_fmt(vv)}")
    lines.append(f"a={_fmt(fit.power)},b={fit.logpower},c={_fmt(fit.constant)},"
                 f"residual={_fmt(fit.residual)}")
    _emit(lines, args.output)
    return 0


def cmd_kernel(args) -> int:
    spec = _load_spec(args.spec)
    ks = oscillate.kernel_eval(spec, args.t, args.u, _kernel_tol(args))
    _emit([f"K({_fmt(args.t)},{_fmt(args.u)}) = {_fmt(ks.value.real)} "
           f"{'+' if ks.value.imag >= 0 else '-'} {_fmt(abs(ks.value.imag))}i",
           f"est_error = {_fmt(ks.est_error)}"], args.output)
    return 0


def _parse_path(args):
    if args.ray is not None:
        return Ray(Direction(args.ray))
    theta, width = args.strip.split(",")
    return Strip(Direction(float(theta)), float(width))


def cmd_decay(args) -> int:
    spec = _load_spec(args.spec)
    path = _parse_path(args)
    fit, rows = oscillate.decay_fit(
        spec, path, (args.rho_min, args.rho_max), samples=args.samples,
        tol=_kernel_tol(args), return_rows=True)
    lines = ["rho,offset,abs_value,est_error"]
    for row in rows:
        lines.append(f"{_fmt(row.rho)},{_fmt(row.offset)},"
                     f"{_fmt(row.abs_value)},{_fmt(row.est_error)}")
    lines.append(f"a={_fmt(fit.power)},b={fit.logpower},c={_fmt(fit.constant)},"
                 f"residual={_fmt(fit.residual)}")
    _emit(lines, args.output)
    return 0


def _parse_scope(text: str):
    if text == "overall":
        return Overall()
    kind, _, rest = text.partition(":")
    if kind == "ray":
        return Ray(Direction(float(rest)))
    if kind == "strip":
        theta, width = rest.split(",")
        return Strip(Direction(float(theta)), float(width))
    raise ValueError(f"unknown scope {text!r}")


def cmd_verify(args) -> int:
    spec = _load_spec(args.spec)
    scope = _parse_scope(args.scope)
    grid = np.geomspace(args.rho_min, args.rho_max, args.samples)
    report = bounds.verify_bounds(spec, scope, grid, tol=_kernel_tol(args))
    est = report.estimate
    lines = [
        f"predicted envelope: power {_fmt(est.exponents.power)} "
        f"log {est.exponents.logpower} sharp={est.sharp} [{est.source}]",
        f"{'PASS' if report.passed else 'FAIL'}: {report.detail}",
        "rho,measured,envelope",
    ]
    for rho, m, e in report.rows:
        lines.append(f"{_fmt(rho)},{_fmt(m)},{_fmt(e)}")
    _emit(lines, args.output)
    return 0


def cmd_probe(args) -> int:
    spec = _load_spec(args.spec)
    L_list = [float(x) for x in args.L.split(",") if x]
    vals = bounds.sharpness_probe(spec, Direction(args.theta), args.delta,
                                  args.eta, L_list, tol=_kernel_tol(args))
    lines = ["L,I_L"]
    for L, val in vals:
        lines.append(f"{_fmt(L)},{_fmt(val)}")
    if len(vals) >= 2 and min(abs(v) for _, v in vals) > 0:
        ratio = max(abs(v) for _, v in vals) / min(abs(v) for _, v in vals)
        lines.append(f"growth={_fmt(ratio)}")
    _emit(lines, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="oscdecay2d",
        description="Kernel decay prediction and verification for 2D "
                    "multipliers built from polynomial factor powers")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="spec file")
        p.add_argument("--output", default=None, help="write output here")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel sample evaluation (serial is the "
                            "reference for goldens)")

    p = sub.add_parser("newton", help="Newton polygon and root directions")
    common(p)
    p.set_defaults(fn=cmd_newton)

    p = sub.add_parser("resolve", help="chart decomposition report")
    common(p)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--deriv-cap", type=int, default=4)
    p.add_argument("--csv", default=None, help="also write a CSV chart table")
    p.set_defaults(fn=cmd_resolve)

    p = sub.add_parser("mass", help="disk or strip mass samples and law fit")
    common(p)
    p.add_argument("--mode", choices=("disk", "strip"), required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--rmin", type=float, default=1e-5)
    p.add_argument("--rmax", type=float, default=1e-2)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--c", type=float, default=None, help="strip half-length")
    p.set_defaults(fn=cmd_mass)

    p = sub.add_parser("kernel", help="evaluate K(t,u)")
    common(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.set_defaults(fn=cmd_kernel)

    p = sub.add_parser("decay", help="sample |K| along a ray or strip")
    common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--ray", type=float, default=None, help="ray angle")
    g.add_argument("--strip", default=None, help="THETA,H")
    p.add_argument("--rho-min", type=float, default=1e2)
    p.add_argument("--rho-max", type=float, default=1e4)
    p.add_argument("--samples", type=int, default=24)
    p.set_defaults(fn=cmd_decay)

    p = sub.add_parser("verify", help="check measured |K| against the envelope")
    common(p)
    p.add_argument("--scope", required=True, help="overall|ray:THETA|strip:THETA,H")
    p.add_argument("--rho-min", type=float, default=1e2)
    p.add_argument("--rho-max", type=float, default=1e4)
    p.add_argument("--samples", type=int, default=17)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("probe", help="sharpness probe I_L along a ray")
    common(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--L", required=True, help="comma-separated L values")
    p.set_defaults(fn=cmd_probe)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (SpecError, FileNotFoundError, ValueError,
            newton.ResolutionError, oscillate.DecayInconclusive) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
