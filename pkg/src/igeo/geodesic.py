"""Geodesic equations in three charts, their numerical integration, and the analytic solutions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import ode
from .diagonal import (
    a0,
    a1,
    block_eigen,
    diagonal_from_canonical,
    diagonal_from_original,
    discriminant,
    eigenvalues,
    mu_scale,
    vector_to_chart,
)
from .errors import AccuracyError, ArgumentError, DomainError, IntegrationError
from .manifold import Chart, Macrostate, ModelParams, check_compatible, metric_tensor

SIGMA_FLOOR = 1e-12
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


class System(enum.Enum):
    FULL = "full"
    DIAGONAL = "diag"
    CANONICAL = "canonical"

    @property
    def chart(self) -> Chart:
        return _SYSTEM_CHART[self]


_SYSTEM_CHART = {
    System.FULL: Chart.ORIGINAL,
    System.DIAGONAL: Chart.DIAGONAL,
    System.CANONICAL: Chart.CANONICAL,
}


@dataclass(frozen=True, eq=False)
class GeodesicState:
    tau: float
    position: Macrostate
    velocity: np.ndarray

    def __post_init__(self):
        v = np.array(self.velocity, dtype=float).reshape(-1)
        if v.size != self.position.coords.size:
            raise ArgumentError(
                f"velocity has {v.size} components, position has {self.position.coords.size}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def chart(self) -> Chart:
        return self.position.chart


@dataclass
class GeodesicTrajectory:
    samples: list[GeodesicState]
    system: System
    stats: ode.StepStats = field(default_factory=ode.StepStats)

    def __len__(self):
        return len(self.samples)

    @property
    def tau(self) -> np.ndarray:
        return np.array([s.tau for s in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position.coords for s in self.samples])

    @property
    def velocities(self) -> np.ndarray:
        return np.array([s.velocity for s in self.samples])

    @property
    def chart(self) -> Chart:
        return self.samples[0].chart

    def squared_speed(self, params: ModelParams) -> np.ndarray:
        """Squared speed under the metric whose geodesics the system describes.

        Original: the Fisher-Rao metric. Diagonal: ``(a- dmu^2 + a+ dsigma^2)/sigma^2``
        per block. Canonical: ``(dmu^2 + 2 dsigma^2)/sigma^2``. Each is constant
        along exact solutions of its own system.
        """
        chart = self.chart
        pos, vel = self.positions, self.velocities
        if chart is Chart.ORIGINAL:
            out = np.empty(len(self.samples))
            for i, s in enumerate(self.samples):
                g = metric_tensor(s.position, params).dense()
                out[i] = s.velocity @ g @ s.velocity
            return out
        if chart is Chart.DIAGONAL:
            ev = np.array([eigenvalues(r) for r in params.r])
            wm, ws = ev[:, 0], ev[:, 1]
        else:
            wm, ws = np.ones(pos.shape[1] // 2), np.full(pos.shape[1] // 2, 2.0)
        sig = pos[:, 1::2]
        return np.sum((wm * vel[:, 0::2] ** 2 + ws * vel[:, 1::2] ** 2) / sig**2, axis=1)


def _require_positive_sigma(sigma: np.ndarray, label: str) -> None:
    bad = np.flatnonzero(~(sigma > 0.0))
    if bad.size:
        k = int(bad[0])
        raise DomainError(f"{label}[{k}] = {sigma[k]!r} must be > 0")


def _full_accel(pos, vel, r):
    mu_d, sg_d = vel[0::2], vel[1::2]
    sigma = pos[1::2]
    _require_positive_sigma(sigma, "sigma")
    c = 1.0 / ((2.0 - r * r) * sigma)
    acc = np.empty_like(vel)
    acc[0::2] = c * (r * mu_d**2 + 4.0 * mu_d * sg_d + 2.0 * r * sg_d**2)
    acc[1::2] = -c * (mu_d**2 + 2.0 * r * mu_d * sg_d + (2.0 * r * r - 2.0) * sg_d**2)
    return acc


def _diag_accel(pos, vel, ratio):
    mu_d, sg_d = vel[0::2], vel[1::2]
    sigma = pos[1::2]
    _require_positive_sigma(sigma, "sigma~")
    acc = np.empty_like(vel)
    acc[0::2] = 2.0 * mu_d * sg_d / sigma
    acc[1::2] = -ratio * mu_d**2 / sigma + sg_d**2 / sigma
    return acc


def _alpha_ratio(params: ModelParams) -> np.ndarray:
    return np.array([am / ap for am, ap in map(eigenvalues, params.r)])


def rhs_full(state: GeodesicState, params: ModelParams) -> np.ndarray:
    """Acceleration of the correlated system in the Original chart."""
    check_compatible(state.position, params, Chart.ORIGINAL)
    return _full_accel(state.position.coords, state.velocity, params.r_array)


def rhs_diagonal(state: GeodesicState, params: ModelParams) -> np.ndarray:
    """Acceleration of the asymptotic diagonalized system."""
    check_compatible(state.position, params, Chart.DIAGONAL)
    return _diag_accel(state.position.coords, state.velocity, _alpha_ratio(params))


def rhs_canonical(state: GeodesicState) -> np.ndarray:
    if state.chart is not Chart.CANONICAL:
        raise DomainError(f"expected a canonical state, got {state.chart.value}")
    return _diag_accel(state.position.coords, state.velocity, 0.5)


def _flat_rhs(system: System, params: ModelParams | None, n: int):
    if system is System.FULL:
        r = params.r_array

        def accel(pos, vel):
            return _full_accel(pos, vel, r)
    else:
        ratio = _alpha_ratio(params) if system is System.DIAGONAL else 0.5

        def accel(pos, vel):
            return _diag_accel(pos, vel, ratio)

    def f(_t, y):
        pos, vel = y[:n], y[n:]
        return np.concatenate([vel, accel(pos, vel)])

    return f


def integrate(
    system: System,
    initial: GeodesicState,
    tau_end: float,
    params: ModelParams | None = None,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    tau_eval=None,
    max_step: float | None = None,
) -> GeodesicTrajectory:
    """Integrate a geodesic initial-value problem.

    ``params`` is required for the full and diagonal systems. Samples are the
    accepted steps plus every point of ``tau_eval``. A sigma component
    dropping below ``SIGMA_FLOOR`` raises :class:`SingularityError` carrying
    the last good state.
    """
    if initial.chart is not system.chart:
        raise ArgumentError(f"{system.value} system needs a {system.chart.value} initial state")
    if system is not System.CANONICAL:
        if params is None:
            raise ArgumentError(f"{system.value} system needs model parameters")
        check_compatible(initial.position, params, system.chart)
    if not tau_end > initial.tau:
        raise ArgumentError(f"tau_end = {tau_end!r} must exceed the initial tau {initial.tau!r}")
    if not (0 < rel_tol < 1 and 0 < abs_tol < 1):
        raise ArgumentError("tolerances must lie in (0, 1)")
    n = initial.position.coords.size
    f = _flat_rhs(system, params, n)

    def check(_t, y):
        sig = y[1:n:2]
        if np.any(sig < SIGMA_FLOOR):
            k = int(np.argmin(sig))
            return f"sigma[{k}] crossed the floor {SIGMA_FLOOR:g}"
        return None

    y0 = np.concatenate([initial.position.coords, initial.velocity])
    chart = system.chart
    try:
        sol = ode.solve(f, initial.tau, y0, tau_end, rtol=rel_tol, atol=abs_tol,
                        t_eval=tau_eval, max_step=max_step, check=check)
    except IntegrationError as exc:
        if exc.last_state is not None:
            t, y = exc.last_state
            exc.last_state = GeodesicState(t, Macrostate(chart, y[:n]), y[n:])
        raise
    samples = [GeodesicState(t, Macrostate(chart, y[:n]), y[n:]) for t, y in zip(sol.t, sol.y)]
    return GeodesicTrajectory(samples, system, sol.stats)


# analytic solutions ---------------------------------------------------------

def analytic_geodesic_canonical(tau, xi: float, lam: float):
    """Closed-form solution of the canonical system, ``(mu', sigma')``.

    mu' = (Xi^2 / 2 lam) / (e^{-2 lam tau} + Xi^2/8lam^2) - 4 lam is evaluated
    in the algebraically identical form -4 lam e^{-2 lam tau} / (...) which
    does not cancel catastrophically at large tau.
    """
    if not (xi > 0 and lam > 0):
        raise DomainError("xi and lambda must be positive")
    tau = np.asarray(tau, dtype=float)
    k = xi * xi / (8.0 * lam * lam)
    e1 = np.exp(-lam * tau)
    e2 = e1 * e1
    den = e2 + k
    mu = -4.0 * lam * e2 / den
    sigma = xi * e1 / den
    return mu, sigma


def analytic_canonical_derivatives(tau, xi: float, lam: float):
    """First and second tau-derivatives ``(dmu, dsigma, d2mu, d2sigma)`` of the canonical solution."""
    tau = np.asarray(tau, dtype=float)
    k = xi * xi / (8.0 * lam * lam)
    u = np.exp(-lam * tau)
    e2 = u * u
    den = e2 + k
    dmu = xi * xi * e2 / den**2
    dsig = xi * lam * (u * e2 - k * u) / den**2
    d2mu = -2.0 * lam * xi * xi * e2 * (k - e2) / den**3
    d2sig = xi * lam**2 * (-(3.0 * u * e2 - k * u) * den + 4.0 * e2 * (u * e2 - k * u)) / den**3
    return dmu, dsig, d2mu, d2sig


def analytic_geodesic_printed(tau, r: float, lam: float, xi: float):
    """Original-chart geodesic written out term by term as the closed-form pair."""
    tau = np.asarray(tau, dtype=float)
    s = math.sqrt(discriminant(r))
    am, ap = (3.0 - s) / 2.0, (3.0 + s) / 2.0
    c = math.sqrt(ap / (2.0 * am))
    den = np.exp(-2.0 * lam * tau) + xi**2 / (8.0 * lam**2)
    bracket = (xi**2 / (2.0 * lam)) / den - 4.0 * lam
    tail = xi * np.exp(-lam * tau) / den
    mu = c * bracket + tail
    sigma = (1.0 - s) / (2.0 * r) * c * bracket + (1.0 + s) / (2.0 * r) * tail
    return mu, sigma


def analytic_geodesic_original(tau, params: ModelParams, k: int = 0):
    """Original-chart geodesic of block ``k`` via the canonical solution and the chart maps."""
    r, lam, xi = params.block(k)
    mu_p, sig_p = analytic_geodesic_canonical(tau, xi, lam)
    mu_t = mu_p / mu_scale(r)
    E = block_eigen(r).E
    return E[0, 0] * mu_t + E[0, 1] * sig_p, E[1, 0] * mu_t + E[1, 1] * sig_p


def analytic_state(tau: float, params: ModelParams, chart: Chart = Chart.CANONICAL) -> GeodesicState:
    """Position and velocity of the analytic geodesic (all blocks) at ``tau`` in ``chart``."""
    n = 2 * params.l
    pos, vel = np.empty(n), np.empty(n)
    for k in range(params.l):
        _, lam, xi = params.block(k)
        m, s = analytic_geodesic_canonical(tau, xi, lam)
        dm, ds, _, _ = analytic_canonical_derivatives(tau, xi, lam)
        pos[2 * k:2 * k + 2] = m, s
        vel[2 * k:2 * k + 2] = dm, ds
    if chart is not Chart.CANONICAL:
        pos = vector_to_chart(pos, params, Chart.CANONICAL, chart)
        vel = vector_to_chart(vel, params, Chart.CANONICAL, chart)
    return GeodesicState(tau, Macrostate(chart, pos), vel)


def analytic_trajectory(taus, params: ModelParams, chart: Chart = Chart.DIAGONAL) -> GeodesicTrajectory:
    system = {Chart.ORIGINAL: System.FULL, Chart.DIAGONAL: System.DIAGONAL,
              Chart.CANONICAL: System.CANONICAL}[chart]
    return GeodesicTrajectory([analytic_state(t, params, chart) for t in taus], system)


# working hypothesis ----------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    max_ratio: float
    threshold_ok: bool
    margin: float
    per_block: tuple[float, ...]


def hypothesis_ratio(theta: Macrostate, params: ModelParams) -> np.ndarray:
    """Per-block ``|mu~/sigma~| * |a0/a1|`` at a Diagonal-chart point."""
    check_compatible(theta, params, Chart.DIAGONAL)
    w = np.array([abs(a0(r) / a1(r)) for r in params.r])
    return np.abs(theta.mu / theta.sigma) * w


def _to_diagonal(theta: Macrostate, params: ModelParams) -> Macrostate:
    if theta.chart is Chart.DIAGONAL:
        return theta
    if theta.chart is Chart.ORIGINAL:
        return diagonal_from_original(theta, params)
    return diagonal_from_canonical(theta, params)


def hypothesis_check(traj: GeodesicTrajectory, params: ModelParams, margin: float = 0.1) -> HypothesisReport:
    """Sup of the weighted ratio over the trailing half of the trajectory, compared with ``margin``."""
    if not traj.samples:
        raise ArgumentError("empty trajectory")
    taus = traj.tau
    cut = taus[0] + 0.5 * (taus[-1] - taus[0])
    worst = np.zeros(params.l)
    for s in traj.samples:
        if s.tau < cut:
            continue
        d = _to_diagonal(s.position, params)
        _require_positive_sigma(d.sigma, "sigma~")
        worst = np.maximum(worst, hypothesis_ratio(d, params))
    m = float(np.max(worst))
    return HypothesisReport(m, m < margin, margin, tuple(float(w) for w in worst))


def decay_rate(taus, ratios) -> float:
    """Exponential decay rate from a least-squares fit of ``log|ratio|`` against tau."""
    taus = np.asarray(taus, dtype=float)
    ratios = np.abs(np.asarray(ratios, dtype=float))
    if taus.size < 2 or np.any(ratios <= 0):
        raise ArgumentError("need at least two strictly nonzero ratios")
    slope = np.polyfit(taus, np.log(ratios), 1)[0]
    return float(-slope)


# boundary-value wrapper ------------------------------------------------------

def shoot(
    system: System,
    start: Macrostate,
    target: Macrostate,
    params: ModelParams | None = None,
    tau_end: float = 1.0,
    velocity_guess=None,
    tol: float = 1e-9,
    max_iter: int = 50,
    rel_tol: float = 1e-11,
    abs_tol: float = 1e-13,
) -> GeodesicTrajectory:
    """Two-point geodesic by single shooting with damped Newton updates.

    Finds the initial velocity carrying ``start`` to ``target`` at
    ``tau_end``; the Jacobian is formed by finite differences of the
    endpoint map. Raises :class:`AccuracyError` after ``max_iter`` iterations.
    """
    if start.chart is not system.chart or target.chart is not system.chart:
        raise ArgumentError(f"{system.value} system needs {system.chart.value} endpoints")
    n = start.coords.size
    v = (target.coords - start.coords) / tau_end if velocity_guess is None else np.array(velocity_guess, float)

    def endpoint(vel):
        traj = integrate(system, GeodesicState(0.0, start, vel), tau_end, params,
                         rel_tol=rel_tol, abs_tol=abs_tol)
        return traj, traj.samples[-1].position.coords - target.coords

    def safe_endpoint(vel):
        try:
            return endpoint(vel)
        except (IntegrationError, DomainError):
            return None, None

    traj, res = endpoint(v)
    scale = 1.0 + np.max(np.abs(target.coords))
    for _ in range(max_iter):
        norm = np.max(np.abs(res))
        if norm <= tol * scale:
            return traj
        J = np.empty((n, n))
        for j in range(n):
            dv = 1e-6 * max(1.0, abs(v[j]))
            vp = v.copy()
            vp[j] += dv
            _, rp = endpoint(vp)
            J[:, j] = (rp - res) / dv
        step = np.linalg.solve(J, -res)
        damping = 1.0
        while damping > 1e-4:
            trial_traj, trial_res = safe_endpoint(v + damping * step)
            if trial_res is not None and np.max(np.abs(trial_res)) < norm:
                break
            damping *= 0.5
        else:
            raise AccuracyError("shooting line search stalled", estimate=v, error=norm)
        v = v + damping * step
        traj, res = trial_traj, trial_res
    norm = float(np.max(np.abs(res)))
    if norm <= tol * scale:
        return traj
    raise AccuracyError(f"shooting did not converge in {max_iter} iterations", estimate=v, error=norm)


__all__ = [
    "System", "GeodesicState", "GeodesicTrajectory", "HypothesisReport",
    "rhs_full", "rhs_diagonal", "rhs_canonical", "integrate",
    "analytic_geodesic_canonical", "analytic_canonical_derivatives",
    "analytic_geodesic_printed", "analytic_geodesic_original",
    "analytic_state", "analytic_trajectory", "hypothesis_ratio", "hypothesis_check",
    "decay_rate", "shoot",
]
