"""Strict JSON run configuration.

Unknown keys, duplicate keys and invalid values are all rejected; every
offending field yields exactly one diagnostic naming it.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .manifold import Chart, DensityMode, Macrostate, ModelParams

FORMATS = ("csv", "json", "gnuplot-data")
GEODESIC_MODES = ("full", "diag", "canonical", "analytic")
SWEEP_AXES = ("r", "lambda", "xi", "l")
SWEEP_QUANTITIES = ("scalar_curvature", "lambda1", "lambda2", "sigma", "ige_at_tau")
DEFAULT_GRID_CAP = 1_000_000

_TOP_KEYS = {"l", "r", "lambda", "xi", "tau", "tolerances", "density_mode", "output",
             "seed", "reference", "geodesic", "sweep"}
_TAU_KEYS = {"start", "end", "points", "log_grid"}
_TOL_KEYS = {"ode_rel", "ode_abs", "quadrature_abs", "fd_step"}
_OUT_KEYS = {"directory", "formats"}
_REF_KEYS = {"mu", "sigma"}
_GEO_KEYS = {"mode", "tau_end", "samples", "chart", "initial"}
_INIT_KEYS = {"position", "velocity"}
_SWEEP_KEYS = {"axes", "quantities", "ige_tau", "max_points", "workers"}
_RANGE_KEYS = {"start", "stop", "count"}


@dataclass(frozen=True)
class TauGrid:
    start: float = 1e3
    end: float = 1e6
    points: int = 31
    log_grid: bool = True

    def values(self) -> np.ndarray:
        if self.log_grid:
            return np.logspace(math.log10(self.start), math.log10(self.end), self.points)
        return np.linspace(self.start, self.end, self.points)


@dataclass(frozen=True)
class Tolerances:
    ode_rel: float = 1e-9
    ode_abs: float = 1e-12
    quadrature_abs: float = 1e-12
    fd_step: float = 1e-5


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "igeo-out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class GeodesicSpec:
    mode: str = "analytic"
    tau_end: float = 10.0
    samples: int = 201
    chart: Chart = Chart.ORIGINAL
    position: tuple[float, ...] | None = None
    velocity: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SweepSpec:
    axes: dict[str, tuple]  # name -> values, in SWEEP_AXES order
    quantities: tuple[str, ...] = ("scalar_curvature", "lambda1", "lambda2", "sigma")
    ige_tau: tuple[float, ...] = ()
    max_points: int = DEFAULT_GRID_CAP
    workers: int = 1

    @property
    def size(self) -> int:
        return int(np.prod([len(v) for v in self.axes.values()])) if self.axes else 1


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    tau: TauGrid = TauGrid()
    tolerances: Tolerances = Tolerances()
    density_mode: DensityMode = DensityMode.REDUCED
    output: OutputSpec = OutputSpec()
    seed: int = 20240101
    reference: Macrostate | None = None
    geodesic: GeodesicSpec = GeodesicSpec()
    sweep: SweepSpec | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def reference_state(self) -> Macrostate:
        if self.reference is not None:
            return self.reference
        l = self.model.l
        return Macrostate.from_blocks(Chart.ORIGINAL, np.zeros(l), np.ones(l))

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _reject_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    return data


class _Checker:
    """Collects diagnostics while pulling typed values out of nested dicts."""

    def __init__(self):
        self.errors: list[str] = []

    def fail(self, msg: str) -> None:
        self.errors.append(msg)

    def section(self, data, name: str, allowed: set) -> dict:
        if data is None:
            return {}
        if not isinstance(data, dict):
            self.fail(f"{name} must be an object")
            return {}
        unknown = sorted(set(data) - allowed)
        if unknown:
            self.fail(f"unknown key(s) in {name}: {', '.join(unknown)}")
        return data

    def number(self, data, key, name, default, *, positive=False, nonneg=False, unit=False):
        if key not in data:
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(f"{name} must be a finite number")
            return default
        if positive and not v > 0:
            self.fail(f"{name} must be > 0")
            return default
        if nonneg and v < 0:
            self.fail(f"{name} must be >= 0")
            return default
        if unit and not 0 < v < 1:
            self.fail(f"{name} must lie in (0,1)")
            return default
        return float(v)

    def integer(self, data, key, name, default, minimum=1):
        if key not in data:
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{name} must be an integer")
            return default
        if v < minimum:
            self.fail(f"{name} must be >= {minimum}")
            return default
        return v

    def vector(self, data, key, name, required=True):
        if key not in data:
            if required:
                self.fail(f"{name} is required")
            return None
        v = data[key]
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list) or not v:
            self.fail(f"{name} must be a nonempty list of numbers")
            return None
        if any(isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x) for x in v):
            self.fail(f"{name} must contain only finite numbers")
            return None
        return [float(x) for x in v]


def _model(ck: _Checker, data: dict) -> ModelParams | None:
    l = ck.integer(data, "l", "l", None)
    vecs = {}
    for key in ("r", "lambda", "xi"):
        vecs[key] = ck.vector(data, key, key)
    n = l
    for key, v in vecs.items():
        if v is None:
            continue
        if n is None:
            n = len(v)
        if len(v) == 1 and n > 1:
            vecs[key] = v * n
        elif len(v) != n:
            ck.fail(f"{key} has length {len(v)}, expected l={n}")
            vecs[key] = None
    if vecs["r"] is not None:
        for k, rk in enumerate(vecs["r"]):
            if not 0.0 < rk < 1.0:
                ck.fail(f"r[{k}] outside (0,1)")
                vecs["r"] = None
                break
    for key in ("lambda", "xi"):
        if vecs[key] is not None:
            for k, x in enumerate(vecs[key]):
                if not x > 0:
                    ck.fail(f"{key}[{k}] must be > 0")
                    vecs[key] = None
                    break
    if any(v is None for v in vecs.values()):
        return None
    return ModelParams(r=vecs["r"], lam=vecs["lambda"], xi=vecs["xi"])


def _axis_values(ck: _Checker, spec, name: str):
    if isinstance(spec, list):
        if not spec:
            ck.fail(f"{name} must be nonempty")
            return None
        if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in spec):
            ck.fail(f"{name} must contain only numbers")
            return None
        vals = spec
    elif isinstance(spec, dict):
        spec = ck.section(spec, name, _RANGE_KEYS)
        missing = sorted(_RANGE_KEYS - set(spec))
        if missing:
            ck.fail(f"{name} range needs {', '.join(missing)}")
            return None
        count = ck.integer(spec, "count", f"{name}.count", None)
        lo = ck.number(spec, "start", f"{name}.start", None)
        hi = ck.number(spec, "stop", f"{name}.stop", None)
        if None in (count, lo, hi):
            return None
        vals = [float(x) for x in np.linspace(lo, hi, count)]
    else:
        ck.fail(f"{name} must be a list or a {{start, stop, count}} range")
        return None
    if name.endswith(".l"):
        if any(not float(x).is_integer() or x < 1 for x in vals):
            ck.fail(f"{name} values must be positive integers")
            return None
        return tuple(int(x) for x in vals)
    vals = tuple(float(x) for x in vals)
    if name.endswith(".r") and any(not 0 < x < 1 for x in vals):
        ck.fail(f"{name} values must lie in (0,1)")
        return None
    if (name.endswith(".lambda") or name.endswith(".xi")) and any(not x > 0 for x in vals):
        ck.fail(f"{name} values must be > 0")
        return None
    return vals


def _sweep(ck: _Checker, data) -> SweepSpec | None:
    if data is None:
        return None
    data = ck.section(data, "sweep", _SWEEP_KEYS)
    axes_raw = ck.section(data.get("axes", {}), "sweep.axes", set(SWEEP_AXES))
    axes = {}
    for name in SWEEP_AXES:
        if name in axes_raw:
            vals = _axis_values(ck, axes_raw[name], f"sweep.axes.{name}")
            if vals is not None:
                axes[name] = vals
    quantities = data.get("quantities", list(SweepSpec.quantities))
    if not isinstance(quantities, list) or not all(q in SWEEP_QUANTITIES for q in quantities):
        ck.fail(f"sweep.quantities must be a list drawn from {', '.join(SWEEP_QUANTITIES)}")
        quantities = list(SweepSpec.quantities)
    ige_tau = ck.vector(data, "ige_tau", "sweep.ige_tau", required=False) or []
    if any(t <= 0 for t in ige_tau):
        ck.fail("sweep.ige_tau values must be > 0")
        ige_tau = []
    if ige_tau and "ige_at_tau" not in quantities:
        quantities = list(quantities) + ["ige_at_tau"]
    max_points = ck.integer(data, "max_points", "sweep.max_points", DEFAULT_GRID_CAP)
    workers = ck.integer(data, "workers", "sweep.workers", 1)
    return SweepSpec(axes, tuple(quantities), tuple(ige_tau), max_points, workers)


def parse_config(data: dict) -> RunConfig:
    """Validate an already-parsed mapping and fill defaults."""
    ck = _Checker()
    data = ck.section(data, "config", _TOP_KEYS)
    model = _model(ck, data)

    t = ck.section(data.get("tau"), "tau", _TAU_KEYS)
    log_grid = t.get("log_grid", TauGrid.log_grid)
    if not isinstance(log_grid, bool):
        ck.fail("tau.log_grid must be true or false")
        log_grid = True
    start = ck.number(t, "start", "tau.start", TauGrid.start, nonneg=True)
    end = ck.number(t, "end", "tau.end", TauGrid.end, positive=True)
    points = ck.integer(t, "points", "tau.points", TauGrid.points, minimum=2)
    if not end > start:
        ck.fail("tau.end must exceed tau.start")
    elif log_grid and start <= 0:
        ck.fail("tau.start must be > 0 for a log grid")
    tau = TauGrid(start, end, points, log_grid)

    tl = ck.section(data.get("tolerances"), "tolerances", _TOL_KEYS)
    tols = Tolerances(
        ode_rel=ck.number(tl, "ode_rel", "tolerances.ode_rel", Tolerances.ode_rel, unit=True),
        ode_abs=ck.number(tl, "ode_abs", "tolerances.ode_abs", Tolerances.ode_abs, unit=True),
        quadrature_abs=ck.number(tl, "quadrature_abs", "tolerances.quadrature_abs",
                                 Tolerances.quadrature_abs, positive=True),
        fd_step=ck.number(tl, "fd_step", "tolerances.fd_step", Tolerances.fd_step, positive=True),
    )

    density = DensityMode.REDUCED
    if "density_mode" in data:
        try:
            density = DensityMode(data["density_mode"])
        except ValueError:
            ck.fail("density_mode must be 'reduced' or 'determinant'")

    o = ck.section(data.get("output"), "output", _OUT_KEYS)
    directory = o.get("directory", OutputSpec.directory)
    if not isinstance(directory, str) or not directory:
        ck.fail("output.directory must be a nonempty string")
        directory = OutputSpec.directory
    formats = o.get("formats", list(OutputSpec.formats))
    if not isinstance(formats, list) or not all(f in FORMATS for f in formats):
        ck.fail(f"output.formats must be a list drawn from {', '.join(FORMATS)}")
        formats = list(OutputSpec.formats)
    output = OutputSpec(directory, tuple(dict.fromkeys(formats)))

    seed = ck.integer(data, "seed", "seed", RunConfig.seed, minimum=0)

    reference = None
    if "reference" in data:
        ref = ck.section(data["reference"], "reference", _REF_KEYS)
        mu = ck.vector(ref, "mu", "reference.mu")
        sg = ck.vector(ref, "sigma", "reference.sigma")
        if mu is not None and sg is not None:
            if len(mu) != len(sg) or (model is not None and len(mu) != model.l):
                ck.fail("reference.mu and reference.sigma must both have length l")
            elif any(s <= 0 for s in sg):
                ck.fail("reference.sigma values must be > 0")
            else:
                reference = Macrostate.from_blocks(Chart.ORIGINAL, mu, sg)

    g = ck.section(data.get("geodesic"), "geodesic", _GEO_KEYS)
    mode = g.get("mode", GeodesicSpec.mode)
    if mode not in GEODESIC_MODES:
        ck.fail(f"geodesic.mode must be one of {', '.join(GEODESIC_MODES)}")
        mode = GeodesicSpec.mode
    chart = GeodesicSpec.chart
    if "chart" in g:
        try:
            chart = Chart(g["chart"])
        except ValueError:
            ck.fail("geodesic.chart must be original, diagonal or canonical")
    init = ck.section(g.get("initial"), "geodesic.initial", _INIT_KEYS)
    pos = ck.vector(init, "position", "geodesic.initial.position", required=bool(init))
    vel = ck.vector(init, "velocity", "geodesic.initial.velocity", required=bool(init))
    if model is not None:
        for name, v in (("position", pos), ("velocity", vel)):
            if v is not None and len(v) != 2 * model.l:
                ck.fail(f"geodesic.initial.{name} must have 2l = {2 * model.l} components")
    geo = GeodesicSpec(
        mode=mode,
        tau_end=ck.number(g, "tau_end", "geodesic.tau_end", GeodesicSpec.tau_end, positive=True),
        samples=ck.integer(g, "samples", "geodesic.samples", GeodesicSpec.samples, minimum=2),
        chart=chart,
        position=None if pos is None else tuple(pos),
        velocity=None if vel is None else tuple(vel),
    )

    sweep = _sweep(ck, data.get("sweep"))

    if ck.errors or model is None:
        raise ConfigError(ck.errors or ["model parameters are invalid"])
    return RunConfig(model, tau, tols, density, output, seed, reference, geo, sweep, raw=data)


def load_config(path) -> RunConfig:
    return parse_config(read_json(path))
