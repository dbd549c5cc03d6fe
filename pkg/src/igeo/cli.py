"""Command-line front end: ``igeo <curvature|geodesic|ige|sweep|validate>``.

Flags override the config file. Exit status: 0 success, 1 validation
failure, 2 runtime or domain error, 3 requested accuracy not achieved.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import complexity as cx
from . import geodesic as gd
from . import geometry as gm
from .config import (
    DEFAULT_GRID_CAP,
    FORMATS,
    GEODESIC_MODES,
    SWEEP_AXES,
    SWEEP_QUANTITIES,
    RunConfig,
    parse_config,
    read_json,
)
from .errors import (
    AccuracyError,
    ArgumentError,
    ConfigError,
    DataError,
    IgeoError,
    IntegrationError,
)
from .manifold import Chart, Macrostate, ModelParams
from .validation import DEFAULT_SEED, SUITES, run_suites

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_ACCURACY = 0, 1, 2, 3
OUTPUT_ENV = "IGEO_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    # usage errors count as validation failures, not argparse's default 2
    def error(self, message):
        raise ArgumentError(message)


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; empty string for missing values."""
    if x is None:
        return ""
    return repr(float(x))


# output helpers ---------------------------------------------------------------

def output_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.output.directory)
    if not d.is_absolute():
        d = Path(os.environ.get(OUTPUT_ENV, ".")) / d
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_dat(path: Path, x, y) -> None:
    path.write_text("".join(f"{fmt(a)} {fmt(b)}\n" for a, b in zip(x, y)))


def _finite(x):
    return None if x is None or not np.isfinite(x) else float(x)


# config assembly -------------------------------------------------------------

def _merge_flags(raw: dict, args) -> dict:
    """Fold command-line flags into the config mapping; flags win."""
    data = json.loads(json.dumps(raw))  # deep copy
    for key, attr in (("r", "r"), ("lambda", "lam"), ("xi", "xi")):
        if getattr(args, attr, None) is not None:
            data[key] = getattr(args, attr)
    if getattr(args, "l", None) is not None:
        data["l"] = args.l
    sections = {
        "tau": (("start", "tau_start"), ("end", "tau_end"), ("points", "tau_points")),
        "tolerances": (("ode_rel", "ode_rel"), ("ode_abs", "ode_abs"),
                       ("quadrature_abs", "quad_abs"), ("fd_step", "fd_step")),
        "output": (("directory", "out"), ("formats", "formats")),
        "geodesic": (("mode", "mode"), ("tau_end", "span"), ("samples", "samples"),
                     ("chart", "chart")),
    }
    for sec, pairs in sections.items():
        for key, attr in pairs:
            val = getattr(args, attr, None)
            if val is not None:
                data.setdefault(sec, {})[key] = val
    if getattr(args, "linear_grid", False):
        data.setdefault("tau", {})["log_grid"] = False
    if getattr(args, "density_mode", None) is not None:
        data["density_mode"] = args.density_mode
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    pos, vel = getattr(args, "position", None), getattr(args, "velocity", None)
    if pos is not None or vel is not None:
        init = data.setdefault("geodesic", {}).setdefault("initial", {})
        if pos is not None:
            init["position"] = pos
        if vel is not None:
            init["velocity"] = vel
    return data


def build_config(args, fill_irrelevant: bool = False) -> RunConfig:
    raw = read_json(args.config) if args.config else {}
    data = _merge_flags(raw, args)
    if fill_irrelevant:
        # geodesic constants do not enter the curvature; default them
        for key in ("lambda", "xi"):
            data.setdefault(key, [1.0])
    return parse_config(data)


# subcommands -----------------------------------------------------------------

def cmd_curvature(args, out=None) -> int:
    out = out or sys.stdout
    if args.baseline:
        raw = read_json(args.config) if args.config else {}
        l = args.l or raw.get("l") or len(raw.get("r", [0])) or 1
        r = np.zeros(l)
        comps = np.array([gm.ricci_block(0.0, 1.0) for _ in range(l)])
        scalar = gm.scalar_curvature_from_r(r)
        print(f"uncorrelated baseline (r = 0), l = {l}", file=out)
        print(f"scalar curvature: {fmt(scalar)}", file=out)
        for k, (a, b, c) in enumerate(comps):
            print(f"block {k}: R11={fmt(a)} R12={fmt(b)} R22={fmt(c)} (mu=0, sigma=1)", file=out)
        return EXIT_OK

    cfg = build_config(args, fill_irrelevant=True)
    theta = cfg.reference_state()
    rep = gm.ricci_tensor(theta, cfg.model)
    print(f"scalar curvature: {fmt(rep.scalar)}", file=out)
    for k, (a, b, c) in enumerate(rep.components):
        print(f"block {k}: R11={fmt(a)} R12={fmt(b)} R22={fmt(c)} "
              f"(mu={fmt(theta.mu[k])}, sigma={fmt(theta.sigma[k])})", file=out)
    summary = {
        "scalar_curvature": rep.scalar,
        "contracted": gm.contracted_scalar_curvature(theta, cfg.model),
        "r": list(cfg.model.r),
        "reference": {"mu": theta.mu.tolist(), "sigma": theta.sigma.tolist()},
        "ricci": rep.components.tolist(),
    }
    if args.check_numeric:
        h = cfg.tolerances.fd_step
        dev = float(np.max(np.abs(gm.christoffel_analytic(theta, cfg.model).gamma
                                  - gm.christoffel_numeric(theta, cfg.model, h).gamma)))
        rdev = float(np.max(np.abs(rep.components - gm.ricci_numeric(theta, cfg.model))))
        print(f"christoffel max deviation (h={fmt(h)}): {dev:.3e}", file=out)
        print(f"ricci max deviation: {rdev:.3e}", file=out)
        summary["christoffel_max_deviation"] = dev
        summary["ricci_max_deviation"] = rdev
    d = output_dir(cfg)
    if "csv" in cfg.output.formats:
        _write_csv(d / "curvature.csv", ["block", "r", "mu", "sigma", "R11", "R12", "R22"],
                   [[k, fmt(cfg.model.r[k]), fmt(theta.mu[k]), fmt(theta.sigma[k]), *map(fmt, row)]
                    for k, row in enumerate(rep.components)])
    if "json" in cfg.output.formats:
        _write_json(d / "curvature.json", summary)
    return EXIT_OK


def _trajectory_rows(traj):
    chart = traj.chart.value
    for s in traj.samples:
        for k in range(s.position.l):
            yield [fmt(s.tau), k, chart, fmt(s.position.mu[k]), fmt(s.position.sigma[k]),
                   fmt(s.velocity[2 * k]), fmt(s.velocity[2 * k + 1])]


def cmd_geodesic(args, out=None) -> int:
    out = out or sys.stdout
    cfg = build_config(args)
    g, p = cfg.geodesic, cfg.model
    taus = np.linspace(0.0, g.tau_end, g.samples)
    summary = {"mode": g.mode, "tau_end": g.tau_end, "samples": g.samples, "r": list(p.r),
               "lambda": list(p.lam), "xi": list(p.xi)}
    if g.mode == "analytic":
        traj = gd.analytic_trajectory(taus, p, g.chart)
        summary.update(chart=g.chart.value, steps=0, rejections=0)
        print(f"analytic geodesic sampled at {g.samples} points in the {g.chart.value} chart", file=out)
    else:
        system = {"full": gd.System.FULL, "diag": gd.System.DIAGONAL,
                  "canonical": gd.System.CANONICAL}[g.mode]
        chart = system.chart
        custom = g.position is not None
        if custom:
            init = gd.GeodesicState(0.0, Macrostate(chart, g.position), g.velocity)
        else:
            init = gd.analytic_state(0.0, p, chart)
        tol = cfg.tolerances
        try:
            full = gd.integrate(system, init, g.tau_end, p, rel_tol=tol.ode_rel, abs_tol=tol.ode_abs,
                                tau_eval=taus)
        except IntegrationError as exc:
            last = exc.last_state
            where = f" (last good tau = {fmt(last.tau)})" if last is not None else ""
            raise IntegrationError(f"{exc}{where}", last) from None
        keep = np.isin(full.tau, taus)
        traj = gd.GeodesicTrajectory([s for s, k in zip(full.samples, keep) if k], system, full.stats)
        q = full.squared_speed(p)
        drift = float(np.max(np.abs(q - q[0])) / abs(q[0]))
        gap = None
        # the analytic curves solve the diagonal/canonical systems, not the full one
        if not custom and system is not gd.System.FULL:
            ref = np.array([gd.analytic_state(t, p, chart).position.coords for t in traj.tau])
            gap = float(np.max(np.abs(traj.positions - ref)))
        summary.update(chart=chart.value, steps=full.stats.accepted, rejections=full.stats.rejected,
                       rhs_evaluations=full.stats.rhs_evals, conservation_drift=drift,
                       analytic_sup_gap=gap)
        print(f"steps: {full.stats.accepted}, rejections: {full.stats.rejected}", file=out)
        print(f"conservation drift (relative squared speed): {drift:.3e}", file=out)
        if gap is not None:
            print(f"sup gap to analytic solution: {gap:.3e}", file=out)
    try:
        hyp = gd.hypothesis_check(traj, p)
        summary["hypothesis_check"] = {"max_ratio": hyp.max_ratio, "ok": hyp.threshold_ok,
                                       "margin": hyp.margin, "per_block": list(hyp.per_block)}
        print(f"hypothesis check: max ratio {hyp.max_ratio:.3e} -> "
              f"{'satisfied' if hyp.threshold_ok else 'not satisfied'}", file=out)
    except IgeoError as exc:
        summary["hypothesis_check"] = {"error": str(exc)}
        print(f"hypothesis check unavailable: {exc}", file=out)

    d = output_dir(cfg)
    if "csv" in cfg.output.formats:
        _write_csv(d / "trajectory.csv", ["tau", "block", "chart", "mu", "sigma", "dmu", "dsigma"],
                   _trajectory_rows(traj))
    if "json" in cfg.output.formats:
        _write_json(d / "geodesic_summary.json", summary)
    if "gnuplot-data" in cfg.output.formats:
        for k in range(p.l):
            _write_dat(d / f"geodesic_mu_{k}.dat", traj.tau, traj.positions[:, 2 * k])
            _write_dat(d / f"geodesic_sigma_{k}.dat", traj.tau, traj.positions[:, 2 * k + 1])
    return EXIT_OK


def cmd_ige(args, out=None) -> int:
    out = out or sys.stdout
    cfg = build_config(args)
    t = cfg.tau.values()
    rep = cx.ige_report(cfg.model, t, modes=args.modes, density_mode=cfg.density_mode,
                        quad_abs_tol=cfg.tolerances.quadrature_abs)
    gap_v = rep.v_closed - rep.igc_saturation
    print(f"saturation sum log Lambda1: {fmt(rep.saturation)}", file=out)
    if rep.fit is not None:
        print(f"power-law fit exponent: {rep.fit.exponent:.6f} (residual {rep.fit.residual:.2e})", file=out)
    for note in rep.notes:
        print(note, file=out)
    if rep.max_relative_gap is not None:
        print(f"max relative closed-vs-quadrature gap: {rep.max_relative_gap:.3e}", file=out)
    print(f"uncorrelated baseline at tau={fmt(t[-1])}: {fmt(rep.baseline_end)}", file=out)
    print(f"correlated entropy at tau={fmt(t[-1])}: {fmt(rep.s_closed[-1])}", file=out)

    d = output_dir(cfg)
    vq = rep.v_quadrature if rep.v_quadrature is not None else [None] * t.size
    if "csv" in cfg.output.formats:
        _write_csv(d / "ige_report.csv", ["tau", "v_closed", "v_quadrature", "s_closed", "saturation_gap"],
                   [[fmt(a), fmt(b), fmt(c), fmt(e), fmt(f)]
                    for a, b, c, e, f in zip(t, rep.v_closed, vq, rep.s_closed, gap_v)])
    if "json" in cfg.output.formats:
        blocks = []
        for k in range(cfg.model.l):
            bf = rep.block_fits[k] if rep.block_fits else None
            blocks.append({"r": cfg.model.r[k], "lambda": cfg.model.lam[k], "xi": cfg.model.xi[k],
                           "Lambda1": rep.lambda1[k], "Lambda2": rep.lambda2[k], "Sigma": rep.sigma[k],
                           "fit_exponent": None if bf is None else bf.exponent,
                           "fit_residual": None if bf is None else bf.residual})
        summary = {
            "blocks": blocks,
            "saturation": rep.saturation,
            "igc_saturation": rep.igc_saturation,
            "fit_exponent": None if rep.fit is None else rep.fit.exponent,
            "fit_residual": None if rep.fit is None else rep.fit.residual,
            "fit_sign": None if rep.fit is None else rep.fit.sign,
            "max_relative_gap": rep.max_relative_gap,
            "baseline_end": rep.baseline_end,
            "density_mode": cfg.density_mode.value,
            "notes": rep.notes,
        }
        if rep.v_determinant is not None:
            summary["v_determinant"] = [_finite(x) for x in rep.v_determinant]
        _write_json(d / "ige_summary.json", summary)
    if "gnuplot-data" in cfg.output.formats:
        _write_dat(d / "ige_v_closed.dat", t, rep.v_closed)
        _write_dat(d / "ige_s_closed.dat", t, rep.s_closed)
        if rep.v_quadrature is not None:
            _write_dat(d / "ige_v_quadrature.dat", t, rep.v_quadrature)
    if rep.max_relative_gap is not None and rep.max_relative_gap >= 1e-9:
        raise AccuracyError(f"closed-vs-quadrature gap {rep.max_relative_gap:.3e} exceeds 1e-9")
    return EXIT_OK


def parse_axis(text: str):
    """``name=a,b,c`` (list) or ``name=start:stop:count`` (range) -> (name, spec)."""
    name, sep, spec = text.partition("=")
    if not sep or name not in SWEEP_AXES:
        raise ArgumentError(f"axis must look like NAME=VALUES with NAME in {', '.join(SWEEP_AXES)}")
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            return name, {"start": float(lo), "stop": float(hi), "count": int(n)}
        return name, [float(v) for v in spec.split(",")]
    except ValueError:
        raise ArgumentError(f"cannot parse axis values {spec!r}") from None


def _sweep_row(point, quantities, ige_tau):
    r, lam, xi, l = point
    p = ModelParams.uniform(l, r, lam, xi)
    row = [fmt(r), fmt(lam), fmt(xi), str(l)]
    for q in quantities:
        if q == "scalar_curvature":
            row.append(fmt(gm.scalar_curvature(p)))
        elif q == "lambda1":
            row.append(fmt(cx.lambda1(r)))
        elif q == "lambda2":
            row.append(fmt(cx.lambda2(r, lam, xi)))
        elif q == "sigma":
            row.append(fmt(cx.sigma_fn(r, lam, xi)))
        elif q == "ige_at_tau":
            for t in ige_tau:
                try:
                    row.append(fmt(cx.ige(t, p)))
                except IgeoError:
                    row.append("nan")
    return row


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    raw = read_json(args.config) if args.config else {}
    data = _merge_flags(raw, args)
    sweep = data.setdefault("sweep", {})
    for text in args.axis or ():
        name, spec = parse_axis(text)
        sweep.setdefault("axes", {})[name] = spec
    if args.quantities is not None:
        sweep["quantities"] = args.quantities
    if args.ige_tau is not None:
        sweep["ige_tau"] = args.ige_tau
    if args.workers is not None:
        sweep["workers"] = args.workers
    if args.max_points is not None:
        sweep["max_points"] = args.max_points
    cfg = parse_config(data)
    spec, m = cfg.sweep, cfg.model
    axes = {"r": (m.r[0],), "lambda": (m.lam[0],), "xi": (m.xi[0],), "l": (m.l,)}
    axes.update(spec.axes)
    size = int(np.prod([len(v) for v in axes.values()]))
    cap = spec.max_points
    if size > cap and not args.allow_large_grid:
        raise ArgumentError(f"sweep grid has {size} points, above the cap of {cap}; "
                            "pass --allow-large-grid to run it anyway")
    quantities = [q for q in SWEEP_QUANTITIES if q in spec.quantities]
    header = ["index", "r", "lambda", "xi", "l"]
    for q in quantities:
        if q == "ige_at_tau":
            header += [f"ige_tau={fmt(t)}" for t in spec.ige_tau]
        else:
            header.append(q)
    points = list(itertools.product(*(axes[a] for a in SWEEP_AXES)))
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        rows = list(pool.map(lambda pt: _sweep_row(pt, quantities, spec.ige_tau), points))
    d = output_dir(cfg)
    _write_csv(d / "sweep.csv", header, ([i, *row] for i, row in enumerate(rows)))
    manifest = {
        "axes": {a: list(axes[a]) for a in SWEEP_AXES},
        "axis_order": list(SWEEP_AXES),
        "columns": header,
        "config_hash": cfg.digest(),
        "ige_tau": list(spec.ige_tau),
        "quantities": quantities,
        "rows": len(rows),
    }
    _write_json(d / "sweep_manifest.json", manifest)
    print(f"sweep: {len(rows)} rows written to {d / 'sweep.csv'}", file=out)
    return EXIT_OK


def cmd_validate(args, out=None) -> int:
    out = out or sys.stdout
    if args.list:
        for name in SUITES:
            print(name, file=out)
        return EXIT_OK
    try:
        results = run_suites(args.suite, seed=args.seed if args.seed is not None else DEFAULT_SEED)
    except KeyError as exc:
        raise ArgumentError(exc.args[0]) from None
    for res in results:
        print(res.line(), file=out)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed", file=out)
    return EXIT_INVALID if failed else EXIT_OK


# parser ------------------------------------------------------------------------

def _model_flags(p):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--l", type=int, help="number of blocks")
    p.add_argument("--r", type=float, nargs="+", help="correlation strengths")
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", help="decay constants")
    p.add_argument("--xi", type=float, nargs="+", help="geodesic amplitude constants")
    p.add_argument("--out", help="output directory (relative paths resolve under $%s)" % OUTPUT_ENV)
    p.add_argument("--format", dest="formats", nargs="+", choices=FORMATS, help="output formats")
    p.add_argument("--seed", type=int)
    p.add_argument("--ode-rel", type=float)
    p.add_argument("--ode-abs", type=float)
    p.add_argument("--quad-abs", type=float)
    p.add_argument("--fd-step", type=float)


def _tau_flags(p):
    p.add_argument("--tau-start", type=float)
    p.add_argument("--tau-end", type=float)
    p.add_argument("--tau-points", type=int)
    p.add_argument("--linear-grid", action="store_true", help="linear instead of log-spaced tau grid")
    p.add_argument("--density-mode", choices=["reduced", "determinant"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="igeo", description="Information geometry of correlated Gaussian models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curvature", help="Ricci scalar and components")
    _model_flags(p)
    p.add_argument("--check-numeric", action="store_true", help="compare with finite differences")
    p.add_argument("--baseline", action="store_true", help="uncorrelated r = 0 closed forms")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("geodesic", help="integrate or sample geodesics")
    _model_flags(p)
    p.add_argument("--mode", choices=GEODESIC_MODES)
    p.add_argument("--span", type=float, help="final affine parameter")
    p.add_argument("--samples", type=int, help="number of output samples")
    p.add_argument("--chart", choices=[c.value for c in Chart], help="chart for analytic samples")
    p.add_argument("--position", type=float, nargs="+", help="initial position in the system's chart")
    p.add_argument("--velocity", type=float, nargs="+", help="initial velocity in the system's chart")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("ige", help="complexity and entropy report")
    _model_flags(p)
    _tau_flags(p)
    p.add_argument("--modes", choices=["closed", "quadrature", "both"], default="both")
    p.set_defaults(func=cmd_ige)

    p = sub.add_parser("sweep", help="parameter sweep")
    _model_flags(p)
    p.add_argument("--axis", action="append", metavar="NAME=VALUES",
                   help="axis as a,b,c or start:stop:count; repeatable")
    p.add_argument("--quantities", nargs="+", choices=SWEEP_QUANTITIES)
    p.add_argument("--ige-tau", type=float, nargs="+")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-points", type=int, help=f"grid cap (default {DEFAULT_GRID_CAP})")
    p.add_argument("--allow-large-grid", action="store_true", help="run grids above the cap")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the invariant suites")
    p.add_argument("--suite", action="append", help="run only this suite; repeatable")
    p.add_argument("--seed", type=int)
    p.add_argument("--list", action="store_true", help="list suite names")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        for diag in exc.diagnostics:
            print(f"config error: {diag}", file=sys.stderr)
        return EXIT_INVALID
    except (ArgumentError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AccuracyError as exc:
        print(f"accuracy not achieved: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except IgeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
