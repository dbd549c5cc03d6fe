"""Adaptive explicit Runge-Kutta integrator (Dormand-Prince 5(4), PI step control)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DomainError, IntegrationError, SingularityError

# Dormand & Prince (1980) tableau; 5th order propagation, 4th order embedded
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
MAX_GROWTH = 5.0
MIN_SHRINK = 0.2
# PI gains for an order-5 method (Gustafsson / Hairer-Wanner II.4)
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_error_norm: float = 0.0  # largest accepted normalized local error (<= 1)


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # (n_samples, n)
    stats: StepStats = field(default_factory=StepStats)


def _error_norm(err, y0, y1, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def _initial_step(f, t0, y0, f0, rtol, atol, span) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        f1 = f(t0 + h0, y0 + h0 * f0)
    except DomainError:
        return h0 * 1e-3
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def solve(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    t_eval: Sequence[float] | None = None,
    max_step: float | None = None,
    check: Callable[[float, np.ndarray], str | None] | None = None,
    max_steps: int = 1_000_000,
) -> Solution:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    Every accepted step is recorded. Points in ``t_eval`` are hit exactly by
    shortening the step that would cross them. ``f`` may raise
    :class:`DomainError` for trial stages outside its domain; the step is then
    rejected and shrunk. ``check(t, y)`` runs on every candidate state; a
    non-empty return value halts integration with :class:`SingularityError`
    carrying the last accepted ``(t, y)``.
    """
    if not t_end > t0:
        raise ArgumentError(f"t_end = {t_end!r} must exceed t0 = {t0!r}")
    if not (0 < rtol < 1 and 0 < atol < 1):
        raise ArgumentError("tolerances must lie in (0, 1)")
    span = t_end - t0
    h_min = 1e-14 * span
    stops = sorted(float(t) for t in (t_eval if t_eval is not None else ()) if t0 < t < t_end)
    stops.append(float(t_end))

    y = np.array(y0, dtype=float)
    t = float(t0)
    stats = StepStats()
    f0 = f(t, y)
    stats.rhs_evals += 1
    h = _initial_step(f, t, y, f0, rtol, atol, span)
    if max_step is not None:
        h = min(h, max_step)
    ts, ys = [t], [y.copy()]
    err_prev = 1.0
    stop_idx = 0
    k = np.empty((7, y.size))

    while t < t_end:
        if stats.accepted + stats.rejected >= max_steps:
            raise IntegrationError(f"step budget of {max_steps} exhausted at t = {t!r}", (t, y.copy()))
        target = stops[stop_idx]
        h_try = min(h, target - t)
        hits_stop = h_try >= target - t
        if h_try < h_min:
            raise IntegrationError(
                f"step size {h_try:.3e} underflowed at t = {t!r}; problem is stiff or singular",
                (t, y.copy()),
            )
        k[0] = f0
        try:
            for i in range(1, 7):
                yi = y + h_try * np.dot(_A[i], k[:i])
                k[i] = f(t + _C[i] * h_try, yi)
            stats.rhs_evals += 6
        except DomainError:
            stats.rejected += 1
            h = h_try * 0.25
            continue
        y_new = y + h_try * np.dot(_B5, k)
        err = h_try * np.dot(_E, k)
        en = _error_norm(err, y, y_new, rtol, atol)
        if not np.isfinite(en):
            stats.rejected += 1
            h = h_try * 0.25
            continue
        if en <= 1.0:
            t_new = target if hits_stop else t + h_try
            if check is not None:
                problem = check(t_new, y_new)
                if problem:
                    raise SingularityError(f"{problem} at t = {t_new!r}", (t, y.copy()))
            t, y = t_new, y_new
            f0 = k[6]  # first-same-as-last
            stats.accepted += 1
            stats.max_error_norm = max(stats.max_error_norm, en)
            ts.append(t)
            ys.append(y.copy())
            if hits_stop:
                stop_idx = min(stop_idx + 1, len(stops) - 1)
            en_c = max(en, 1e-10)
            factor = SAFETY * en_c ** (-_ALPHA) * err_prev ** _BETA
            factor = min(MAX_GROWTH, max(MIN_SHRINK, factor))
            err_prev = en_c
            # a step shortened to land on an output point keeps the old proposal
            if not (hits_stop and h_try < h):
                h = h_try * factor
        else:
            stats.rejected += 1
            factor = max(MIN_SHRINK, SAFETY * en ** (-1 / 5))
            h = h_try * factor
        if max_step is not None:
            h = min(h, max_step)
    return Solution(np.array(ts), np.array(ys), stats)
