"""Command line entry point ``hproj``.

Exit codes: 0 success, 1 verification or numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import analysis as A
from . import experiment as E
from . import fractal as F
from . import geodesic as G
from . import projection as P
from .config import HELP, load_metric, parse_config
from .errors import ConfigError, DomainError, HprojError
from .suite import run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pair(text: str, name: str):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"--{name}: expected two comma-separated numbers, got {text!r}")
    if len(vals) != 2 or not all(map(math.isfinite, vals)):
        raise UsageError(f"--{name}: expected two comma-separated numbers, got {text!r}")
    return tuple(vals)


def _floats(text: str, name: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}")


def _jobs(args) -> int:
    j = args.jobs
    if j is None:
        env = os.environ.get("HPROJ_JOBS")
        try:
            j = int(env) if env else 1
        except ValueError:
            raise UsageError(f"HPROJ_JOBS must be an integer, got {env!r}")
    if j < 1:
        raise UsageError("--jobs must be >= 1")
    return j


@contextmanager
def _mapper(jobs: int):
    if jobs == 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        yield ex.map


def _pencil(args, metric):
    return P.LinePencil(metric, p=_pair(args.p, "p") if args.p else (0.0, 0.0),
                        line_extent=args.extent, step=args.step)


def _emit(args, text: str):
    if getattr(args, "out", None):
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


# -- subcommands -----------------------------------------------------------------


def cmd_geo_shoot(args):
    metric = load_metric(args.metric)
    path = G.shoot(metric, _pair(args.p, "p"), _pair(args.dir, "dir"), args.len, args.step)
    _emit(args, csv_text(["t", "x", "y", "vx", "vy"], path.rows()))


def cmd_geo_dist(args):
    metric = load_metric(args.metric)
    print(_fmt(G.distance(metric, _pair(args.p, "p"), _pair(args.q, "q"), args.step)))


def cmd_proj_foot(args):
    pencil = _pencil(args, load_metric(args.metric))
    r = P.project(pencil, args.theta, _pair(args.q, "q"))
    _emit(args, csv_text(["theta", "s", "dist", "iter"], [(r.theta, r.s, r.dist, r.iterations)]))


def cmd_proj_slope(args):
    pencil = _pencil(args, load_metric(args.metric))
    w = _pair(args.w, "w")
    _emit(args, csv_text(["theta", "slope"], [(args.theta, P.small_scale_slope(pencil, args.theta, w))]))


def cmd_proj_eps_scan(args):
    pencil = _pencil(args, load_metric(args.metric))
    r = P.eps_scan(pencil, _pair(args.w, "w"), d_theta=args.dtheta, max_eps=args.max_eps)
    _emit(args, csv_text(["theta_perp", "norm", "eps_star", "capped", "worst_ratio"],
                         [(r.theta_perp, r.norm, r.eps_star, r.capped, r.worst_ratio)]))


def cmd_verify_all(args):
    metric = load_metric(args.metric)
    with _mapper(_jobs(args)) as mapper:
        rows, errors = run_suite(metric, args.seed, mapper)
    _emit(args, csv_text(["check", "case_id", "residual", "threshold", "pass"], rows))
    print(f"note: {A.R1_NOTE}", file=sys.stderr)
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    failed = sum(1 for r in rows if not r[4])
    if failed:
        print(f"{failed} of {len(rows)} cases failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_bessel_tilde(args):
    pencil = _pencil(args, load_metric(args.metric))
    prof = A.bessel_profile(pencil, _pair(args.w, "w"), args.nodes)
    z = _floats(args.z, "z")
    _emit(args, csv_text(["z", "value"], [(x, prof(x)) for x in z]))


def cmd_bessel_partial(args):
    pencil = _pencil(args, load_metric(args.metric))
    prof = A.bessel_profile(pencil, _pair(args.w, "w"), args.nodes)
    X = _floats(args.X, "X")
    vals = [prof.partial_integral(x, args.dz) for x in X]
    _emit(args, csv_text(["X", "integral"], zip(X, vals)))


def _ifs(text: str) -> F.IFSSpec:
    if text in ("theorem", "control", "full-square"):
        return F.IFSSpec.builtin(text)
    return F.IFSSpec.load(text)


def cmd_fractal_gen(args):
    cells = F.generate(_ifs(args.ifs), args.depth)
    _emit(args, csv_text(["word", "cx", "cy", "radius", "weight"], cells.rows()))


def read_cells(path) -> F.CellSet:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("cells", f"file not found: {path}")
    with p.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError("cells", "no cells in file")
    try:
        centers = np.array([[float(r["cx"]), float(r["cy"])] for r in rows])
        radii = np.array([float(r["radius"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError("cells", f"bad cells CSV: {exc}") from exc
    words = [r.get("word", "") for r in rows]
    depth = max(len(w) for w in words)
    return F.CellSet(depth, centers, radii, radii / F.UNIT_HALF_DIAG, words, p.stem)


def cmd_fractal_dim(args):
    cells = read_cells(args.cells)
    scales = _floats(args.scales, "scales") if args.scales else [3.0 ** -k for k in range(1, 7)]
    slope, r2 = F.box_dimension_estimate(cells, scales)
    _emit(args, csv_text(["slope", "r2"], [(slope, r2)]))


def spectrum_svg(report: E.MarstrandReport) -> str:
    """Angle against total length, one polyline per depth."""
    W, H, m = 640, 360, 40
    ymax = max([r[2] for r in report.rows] + [1e-12])
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
             f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" fill="none" stroke="#000"/>',
             f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-size="12">theta</text>',
             f'<text x="12" y="{m - 10}" font-size="12">total length (max {ymax:.4g})</text>']
    for k, d in enumerate(report.depths):
        pts = [(r[1], r[2]) for r in report.rows if r[0] == d]
        xy = " ".join(f"{m + (t + math.pi / 2) / math.pi * (W - 2 * m):.2f},"
                      f"{H - m - L / ymax * (H - 2 * m):.2f}" for t, L in pts)
        c = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1" points="{xy}"/>')
        parts.append(f'<text x="{W - m - 60}" y="{m + 16 + 14 * k}" font-size="11" fill="{c}">depth {d}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def cmd_marstrand_run(args):
    cfg = parse_config(args.config)
    out = Path(args.out)
    with _mapper(_jobs(args)) as mapper:
        rep = E.marstrand_report(cfg.metric, cfg.ifs, cfg.depths, cfg.theta_count, cfg.delta, cfg.P, cfg.dp,
                                 cfg.pencil_kwargs(E.EXPERIMENT_STEP), mapper=mapper)
    write_atomic(out / "spectrum.csv", csv_text(["depth", "theta", "total_length", "energy"], rep.rows))
    doc = rep.to_json()
    doc["config"] = {"seed": cfg.seed, "theta_count": cfg.theta_count, "P": cfg.P, "dp": cfg.dp, "ifs": cfg.ifs_source}
    write_atomic(out / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if cfg.svg or args.svg:
        write_atomic(out / "spectrum.svg", spectrum_svg(rep))
    if rep.failures:
        for d, t, e in rep.failures:
            print(f"failure depth={d} theta={t!r}: {e}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hproj", description="Projection geometry on non-positively curved planes.",
                                 epilog=HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--jobs", type=int, default=None, help="worker processes (fallback: HPROJ_JOBS, else 1)")
    groups = ap.add_subparsers(dest="group", required=True)

    def sub(group, name, fn, help_):
        p = group.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
        return p

    def metric_opt(p):
        p.add_argument("--metric", help="metric JSON file (default euclidean)")

    def pencil_opts(p):
        metric_opt(p)
        p.add_argument("--p", help="base point x,y (default 0,0)")
        p.add_argument("--extent", type=float, default=P.DEFAULT_EXTENT, help="line extent (default 8)")
        p.add_argument("--step", type=float, default=G.DEFAULT_STEP, help="integrator step (default 1e-3)")
        p.add_argument("--out", help="write CSV here instead of stdout")

    geo = groups.add_parser("geo", help="geodesics").add_subparsers(dest="cmd", required=True)
    p = sub(geo, "shoot", cmd_geo_shoot, "integrate a geodesic; CSV t,x,y,vx,vy")
    metric_opt(p)
    p.add_argument("--p", required=True)
    p.add_argument("--dir", required=True)
    p.add_argument("--len", type=float, required=True)
    p.add_argument("--step", type=float, default=G.DEFAULT_STEP)
    p.add_argument("--out")
    p = sub(geo, "dist", cmd_geo_dist, "Riemannian distance between two points")
    metric_opt(p)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--step", type=float, default=G.DEFAULT_STEP)

    proj = groups.add_parser("proj", help="projection onto lines of the pencil").add_subparsers(dest="cmd", required=True)
    p = sub(proj, "foot", cmd_proj_foot, "foot of q on l_theta; CSV theta,s,dist,iter")
    pencil_opts(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--q", required=True)
    p = sub(proj, "slope", cmd_proj_slope, "small-scale slope lim pi_theta(tw)/t")
    pencil_opts(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--w", required=True)
    p = sub(proj, "eps-scan", cmd_proj_eps_scan, "empirical neighborhood of the derivative bounds")
    pencil_opts(p)
    p.add_argument("--w", required=True)
    p.add_argument("--dtheta", type=float, default=2.5e-3)
    p.add_argument("--max-eps", type=float, default=0.5)

    ver = groups.add_parser("verify", help="verification battery").add_subparsers(dest="cmd", required=True)
    p = sub(ver, "all", cmd_verify_all, "run every check; CSV check,case_id,residual,threshold,pass")
    metric_opt(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    bes = groups.add_parser("bessel", help="direction-averaged oscillation").add_subparsers(dest="cmd", required=True)
    p = sub(bes, "tilde", cmd_bessel_tilde, "J(z) at the listed z; CSV z,value")
    pencil_opts(p)
    p.add_argument("--w", required=True)
    p.add_argument("--z", required=True, help="comma-separated frequencies")
    p.add_argument("--nodes", type=int, default=A.BESSEL_NODES)
    p = sub(bes, "partial", cmd_bessel_partial, "partial integrals of J over [0, X]; CSV X,integral")
    pencil_opts(p)
    p.add_argument("--w", required=True)
    p.add_argument("--X", required=True, help="comma-separated upper limits")
    p.add_argument("--dz", type=float, default=0.05)
    p.add_argument("--nodes", type=int, default=A.BESSEL_NODES)

    fr = groups.add_parser("fractal", help="IFS cell sets").add_subparsers(dest="cmd", required=True)
    p = sub(fr, "gen", cmd_fractal_gen, "generate cells; CSV word,cx,cy,radius,weight")
    p.add_argument("--ifs", required=True, help="theorem|control|full-square or IFS JSON file")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out")
    p = sub(fr, "dim", cmd_fractal_dim, "box-counting dimension; CSV slope,r2")
    p.add_argument("--cells", required=True)
    p.add_argument("--scales", help="comma-separated box sizes (default 3^-1..3^-6)")
    p.add_argument("--out")

    ms = groups.add_parser("marstrand", help="projection experiment").add_subparsers(dest="cmd", required=True)
    p = sub(ms, "run", cmd_marstrand_run, "write spectrum.csv and report.json")
    p.add_argument("--config", help="config JSON (see hproj --help for keys)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--svg", action="store_true", help="also write spectrum.svg")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        code = args.fn(args)
        return EXIT_OK if code is None else code
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HprojError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
