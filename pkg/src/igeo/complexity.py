"""Information geometric complexity V(tau) and entropy S(tau) along the analytic geodesics.

Per block the complexity is the time average of ``sqrt(2 - r^2) * f(tau')``
with ``f = (A e^{-lam t} + B e^{-2 lam t}) / (C e^{-lam t} + D e^{-2 lam t})``,
which is mu(t)/sigma(t) along the Original-chart geodesic. Blocks combine
multiplicatively in V and additively in S.

The inner integral runs from 0. Its exact value is ``F(tau) - F(0)`` where
``F`` is the closed-form antiderivative; the large-tau form drops the
exponential tail of ``F`` but keeps no ``F(0)`` offset, so the asymptotic
``Lambda1 + Lambda2/tau`` differs from the exact time average by a term of
order 1/tau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .diagonal import eigenvalues
from .errors import ArgumentError, DataError, DomainError
from .geodesic import analytic_geodesic_original
from .manifold import DensityMode, ModelParams


def _check_block(r: float, lam: float, xi: float) -> None:
    if not 0.0 < r < 1.0:
        raise DomainError(f"r = {r!r} outside (0,1)")
    if not (lam > 0.0 and xi > 0.0):
        raise DomainError("lambda and xi must be positive")


def _check_tau(tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float)
    if np.any(~(t > 0.0)):
        raise DomainError("tau must be > 0")
    return t


@dataclass(frozen=True)
class AbcdCoefficients:
    A: float
    B: float
    C: float
    D: float

    @property
    def a_over_c(self) -> float:
        return self.A / self.C

    @property
    def b_over_d(self) -> float:
        return self.B / self.D


def abcd(r: float, lam: float, xi: float) -> AbcdCoefficients:
    _check_block(r, lam, xi)
    s = math.sqrt(1.0 + 4.0 * r * r)
    am, ap = eigenvalues(r)
    root = math.sqrt(ap / (2.0 * am))
    return AbcdCoefficients(
        A=xi,
        B=-4.0 * lam * root,
        C=(1.0 + s) / (2.0 * r) * xi,
        D=-4.0 * lam * root * (1.0 - s) / (2.0 * r),
    )


def sigma_fn(r: float, lam: float, xi: float) -> float:
    """The strictly positive ratio C/D entering Lambda2 through its logarithm."""
    _check_block(r, lam, xi)
    s = math.sqrt(1.0 + 4.0 * r * r)
    am, ap = eigenvalues(r)
    num = (1.0 + s) / (2.0 * r) * xi
    den = -4.0 * lam * math.sqrt(ap / (2.0 * am)) * (1.0 - s) / (2.0 * r)
    return num / den


def lambda1(r) -> float | np.ndarray:
    """Saturation value ``2 r sqrt(2 - r^2) / (1 + sqrt(1 + 4 r^2))``; defined on [0, 1]."""
    r = np.asarray(r, dtype=float)
    if np.any((r < 0.0) | (r > 1.0)):
        raise DomainError("r must lie in [0, 1]")
    out = 2.0 * r * np.sqrt(2.0 - r * r) / (1.0 + np.sqrt(1.0 + 4.0 * r * r))
    return float(out) if out.ndim == 0 else out


def lambda2(r: float, lam: float, xi: float) -> float:
    """Coefficient of 1/tau: ``sqrt((1 + 4r^2)(2 - r^2)) / r * ln(Sigma) / lam``."""
    _check_block(r, lam, xi)
    return math.sqrt((1.0 + 4.0 * r * r) * (2.0 - r * r)) / r * math.log(sigma_fn(r, lam, xi)) / lam


def ige_integrand(tau_prime, r: float, lam: float, xi: float):
    """The rational-exponential integrand; tends to A/C = 2r/(1 + sqrt(Delta)).

    Numerator and denominator are divided by e^{-lam t} so large arguments
    do not underflow to 0/0.
    """
    c = abcd(r, lam, xi)
    e = np.exp(-lam * np.asarray(tau_prime, dtype=float))
    den = c.C + c.D * e
    if np.any(den <= 0.0):
        raise DomainError("integrand denominator is not positive")
    return (c.A + c.B * e) / den


def inner_integral_closed(tau, coeffs: AbcdCoefficients, lam: float, mode: str = "exact"):
    """Closed forms of the integral of the integrand.

    ``exact``: definite integral over [0, tau].
    ``antiderivative``: the closed-form antiderivative ``F(tau)`` itself,
    ``(1/lam)(A/C - B/D) ln[(D + C e^{lam tau}) / (D e^{lam tau})] + (A/C) tau``.
    ``asymptotic``: large-tau form ``(1/lam)(A/C - B/D) ln(C/D) + (A/C) tau``.
    """
    tau = np.asarray(tau, dtype=float)
    ac, kk = coeffs.a_over_c, coeffs.a_over_c - coeffs.b_over_d
    ratio = coeffs.C / coeffs.D
    if mode == "exact":
        out = kk / lam * np.log1p(np.expm1(-lam * tau) / (ratio + 1.0)) + ac * tau
    elif mode == "antiderivative":
        out = kk / lam * np.log(ratio + np.exp(-lam * tau)) + ac * tau
    elif mode == "asymptotic":
        out = kk / lam * math.log(ratio) + ac * tau
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


def igc_block(tau, r: float, lam: float, xi: float, mode: str = "asymptotic"):
    """Single-block complexity.

    ``asymptotic``: ``Lambda1(r) + Lambda2/tau``. ``exact``: the time average
    using the exact inner integral over [0, tau].
    """
    t = _check_tau(tau)
    if mode == "asymptotic":
        out = lambda1(r) + lambda2(r, lam, xi) / t
    elif mode == "exact":
        out = math.sqrt(2.0 - r * r) * inner_integral_closed(t, abcd(r, lam, xi), lam, "exact") / t
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


def igc_bracket(tau, r: float, lam: float, xi: float):
    """Single-block complexity in the two-term bracket layout (before collapsing to Lambda2)."""
    t = _check_tau(tau)
    s = math.sqrt(1.0 + 4.0 * r * r)
    pre = 2.0 * r * math.sqrt(2.0 - r * r)
    ln_sig = math.log(sigma_fn(r, lam, xi))
    bracket = pre / ((1.0 + s) * lam) * ln_sig - pre / ((1.0 - s) * lam) * ln_sig
    out = pre / (1.0 + s) + bracket / t
    return float(out) if np.ndim(out) == 0 else out


def igc_closed(tau, params: ModelParams, mode: str = "asymptotic"):
    """Complexity of the full model: product of the per-block values."""
    t = _check_tau(tau)
    out = np.ones_like(t)
    for k in range(params.l):
        out = out * igc_block(t, *params.block(k), mode=mode)
    return float(out) if np.ndim(out) == 0 else out


def _transient_breakpoints(tau: float, lam: float) -> list[float]:
    # the integrand relaxes on the scale 1/lam; geometric breakpoints keep
    # that region resolved however long the averaging window is
    pts, t = [], 0.25 / lam
    while t < tau:
        pts.append(t)
        t *= 2.0
    return pts


def igc_block_quadrature(tau: float, r: float, lam: float, xi: float,
                         density_mode: DensityMode = DensityMode.REDUCED,
                         abs_tol: float = quadrature.DEFAULT_ABS_TOL) -> float:
    """Single-block complexity by adaptive quadrature over [0, tau].

    REDUCED integrates the rational integrand with prefactor sqrt(2 - r^2).
    DETERMINANT swaps the 1/sigma density for 1/sigma^2 and integrates
    sqrt(2 - r^2) mu / sigma^2 along the Original-chart geodesic.
    """
    _check_block(r, lam, xi)
    tau = float(_check_tau(tau))
    pre = math.sqrt(2.0 - r * r)
    points = _transient_breakpoints(tau, lam)
    if density_mode is DensityMode.REDUCED:
        res = quadrature.integrate(lambda t: ige_integrand(t, r, lam, xi), 0.0, tau,
                                   abs_tol=abs_tol, points=points)
    elif density_mode is DensityMode.DETERMINANT:
        p = ModelParams(r=[r], lam=[lam], xi=[xi])

        def g(t):
            mu, sg = analytic_geodesic_original(t, p, 0)
            return mu / sg**2

        res = quadrature.integrate(g, 0.0, tau, abs_tol=abs_tol, points=points)
    else:
        raise ArgumentError(f"unknown density mode {density_mode!r}")
    return pre * res.value / tau


def igc_quadrature(tau, params: ModelParams, density_mode: DensityMode = DensityMode.REDUCED,
                   abs_tol: float = quadrature.DEFAULT_ABS_TOL):
    t = _check_tau(tau)
    flat = np.atleast_1d(t)
    out = np.ones_like(flat)
    for i, ti in enumerate(flat):
        for k in range(params.l):
            out[i] *= igc_block_quadrature(ti, *params.block(k), density_mode=density_mode,
                                           abs_tol=abs_tol)
    return float(out[0]) if np.ndim(t) == 0 else out


def igc_saturation(params: ModelParams) -> float:
    return float(np.prod([lambda1(r) for r in params.r]))


def ige(tau, params: ModelParams):
    """Entropy ``sum_k log(Lambda1(r_k) + Lambda2_k / tau)``."""
    t = _check_tau(tau)
    total = np.zeros_like(t)
    for k in range(params.l):
        arg = igc_block(t, *params.block(k), mode="asymptotic")
        bad = np.asarray(arg) <= 0.0
        if np.any(bad):
            where = float(np.atleast_1d(t)[np.flatnonzero(np.atleast_1d(bad))[0]])
            raise DomainError(f"log argument <= 0 in block {k} at tau = {where!r}")
        total = total + np.log(arg)
    return float(total) if np.ndim(total) == 0 else total


def ige_saturation(params: ModelParams) -> float:
    return float(np.sum(np.log([lambda1(r) for r in params.r])))


def uncorrelated_baseline(tau, lambdas):
    """Entropy without correlations: ``sum_k lambda_k * tau`` (linear growth)."""
    t = np.asarray(tau, dtype=float)
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if np.any(t < 0.0):
        raise DomainError("tau must be >= 0")
    if np.any(~(lam > 0.0)):
        raise DomainError("lambda values must be positive")
    out = float(np.sum(lam)) * t
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    residual: float
    prefactor: float
    sign: int  # sign of (values - saturation) on the grid


def power_law_fit(tau_grid, values, saturation: float) -> PowerLawFit:
    """Least-squares slope of ``log|values - saturation|`` against ``log tau``.

    The differences must share one sign across the grid (either side of the
    saturation value) and the grid must span at least two decades.
    ``residual`` is the RMS of the log-space residuals.
    """
    t = np.asarray(tau_grid, dtype=float)
    diff = np.asarray(values, dtype=float) - saturation
    if t.shape != diff.shape or t.size < 3:
        raise DataError("need matching tau and value arrays with at least 3 points")
    if np.any(t <= 0):
        raise DataError("tau grid must be positive")
    if np.log10(t.max() / t.min()) < 2.0 - 1e-12:
        raise DataError("tau grid must span at least two decades")
    if np.all(diff > 0):
        sign = 1
    elif np.all(diff < 0):
        sign = -1
    else:
        raise DataError("values - saturation changes sign (or vanishes) on the grid")
    x, y = np.log(t), np.log(np.abs(diff))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return PowerLawFit(float(slope), float(np.sqrt(np.mean(resid**2))), float(np.exp(intercept)), sign)


@dataclass
class IgeReport:
    tau_grid: np.ndarray
    v_closed: np.ndarray  # exact time average (inner integral over [0, tau])
    v_quadrature: np.ndarray | None
    v_asymptotic: np.ndarray
    s_closed: np.ndarray
    saturation: float  # sum_k log Lambda1(r_k)
    igc_saturation: float  # prod_k Lambda1(r_k)
    lambda1: tuple[float, ...]
    lambda2: tuple[float, ...]
    sigma: tuple[float, ...]
    fit: PowerLawFit | None
    baseline_end: float
    block_fits: tuple[PowerLawFit | None, ...] = ()
    v_determinant: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def max_relative_gap(self) -> float | None:
        if self.v_quadrature is None:
            return None
        return float(np.max(np.abs(self.v_closed - self.v_quadrature) / np.abs(self.v_closed)))


def ige_report(params: ModelParams, tau_grid, modes: str = "both",
               density_mode: DensityMode = DensityMode.REDUCED,
               quad_abs_tol: float = quadrature.DEFAULT_ABS_TOL) -> IgeReport:
    """Evaluate the complexity/entropy curves on ``tau_grid``.

    ``modes`` is ``closed``, ``quadrature`` or ``both``; the quadrature column
    is omitted for ``closed``. The power-law fit runs on the exact curve when
    the grid spans two decades.
    """
    if modes not in ("closed", "quadrature", "both"):
        raise ArgumentError(f"unknown modes {modes!r}")
    t = _check_tau(np.asarray(tau_grid, dtype=float))
    v_exact = igc_closed(t, params, mode="exact")
    v_asym = igc_closed(t, params, mode="asymptotic")
    v_quad = igc_quadrature(t, params, abs_tol=quad_abs_tol) if modes != "closed" else None
    v_det = None
    if density_mode is DensityMode.DETERMINANT and modes != "closed":
        v_det = igc_quadrature(t, params, DensityMode.DETERMINANT, abs_tol=quad_abs_tol)
    s = ige(t, params)
    notes = []
    fit = None
    try:
        fit = power_law_fit(t, v_exact, igc_saturation(params))
    except DataError as exc:
        notes.append(f"power-law fit skipped: {exc}")
    block_fits = []
    for k in range(params.l):
        r, lam, xi = params.block(k)
        try:
            block_fits.append(power_law_fit(t, igc_block(t, r, lam, xi, mode="exact"), lambda1(r)))
        except DataError:
            block_fits.append(None)
    return IgeReport(
        tau_grid=t,
        v_closed=np.atleast_1d(v_exact),
        v_quadrature=None if v_quad is None else np.atleast_1d(v_quad),
        v_asymptotic=np.atleast_1d(v_asym),
        s_closed=np.atleast_1d(s),
        saturation=ige_saturation(params),
        igc_saturation=igc_saturation(params),
        lambda1=tuple(lambda1(r) for r in params.r),
        lambda2=tuple(lambda2(*params.block(k)) for k in range(params.l)),
        sigma=tuple(sigma_fn(*params.block(k)) for k in range(params.l)),
        fit=fit,
        baseline_end=uncorrelated_baseline(float(t[-1]), params.lam),
        block_fits=tuple(block_fits),
        v_determinant=None if v_det is None else np.atleast_1d(v_det),
        notes=notes,
    )
