"""Closed-form diagonalization of the 2x2 metric blocks and the chart maps.

Original (mu, sigma) -> Diagonal (mu~, sigma~) is ``theta~ = E^-1 theta`` per
block, with ``E(r)`` holding the (unnormalized) eigenvectors as columns.
Diagonal -> Canonical rescales mu~ by ``sqrt(2 alpha_- / alpha_+)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError
from .manifold import Chart, Macrostate, ModelParams, check_compatible

# a1(r) ~ 1/r; below this the basis change is numerically meaningless
R_MIN = 1e-6


def _check_r(r: float) -> None:
    if not R_MIN <= r < 1.0:
        raise DomainError(
            f"r = {r!r} outside [{R_MIN}, 1); use the uncorrelated baseline for r -> 0"
        )


def discriminant(r: float) -> float:
    return 1.0 + 4.0 * r * r


def eigenvalues(r: float) -> tuple[float, float]:
    """``(alpha_-, alpha_+) = (3 -+ sqrt(1 + 4 r^2)) / 2``; well defined at r = 0."""
    s = math.sqrt(discriminant(r))
    return (3.0 - s) / 2.0, (3.0 + s) / 2.0


def a0(r: float) -> float:
    """``(1 - sqrt(Delta)) / 2r``, negative on (0, 1)."""
    _check_r(r)
    return (1.0 - math.sqrt(discriminant(r))) / (2.0 * r)


def a1(r: float) -> float:
    """``(1 + sqrt(Delta)) / 2r``, positive on (0, 1)."""
    _check_r(r)
    return (1.0 + math.sqrt(discriminant(r))) / (2.0 * r)


def mu_scale(r: float) -> float:
    """Factor ``sqrt(2 alpha_- / alpha_+)`` taking mu~ to mu'."""
    am, ap = eigenvalues(r)
    return math.sqrt(2.0 * am / ap)


@dataclass(frozen=True, eq=False)
class BlockEigen:
    r: float
    alpha_minus: float
    alpha_plus: float
    E: np.ndarray
    E_inv: np.ndarray
    delta: float

    @property
    def D(self) -> np.ndarray:
        return np.diag([self.alpha_minus, self.alpha_plus])


def block_eigen(r: float) -> BlockEigen:
    _check_r(r)
    delta = discriminant(r)
    s = math.sqrt(delta)
    am, ap = (3.0 - s) / 2.0, (3.0 + s) / 2.0
    lo, hi = (1.0 - s) / (2.0 * r), (1.0 + s) / (2.0 * r)
    E = np.array([[1.0, 1.0], [lo, hi]])
    E_inv = (r / s) * np.array([[hi, -1.0], [-lo, 1.0]])
    E.setflags(write=False)
    E_inv.setflags(write=False)
    return BlockEigen(r, am, ap, E, E_inv, delta)


def reconstruct_metric(eig: BlockEigen, sigma: float) -> np.ndarray:
    """``(1/sigma^2) E diag(alpha_-, alpha_+) E^-1``, i.e. the Original-chart block."""
    if not sigma > 0.0:
        raise DomainError(f"sigma = {sigma!r} must be > 0")
    return eig.E @ eig.D @ eig.E_inv / sigma**2


def diagonal_metric_blocks(theta: Macrostate, params: ModelParams) -> np.ndarray:
    """Diagonal-chart blocks ``diag(alpha_-, alpha_+) / sigma(mu~, sigma~)^2``.

    The sigma in the denominator is the Original-chart sigma recovered from
    the Diagonal coordinates, ``a0 mu~ + a1 sigma~``.
    """
    orig = original_from_diagonal(theta, params)
    out = np.zeros((params.l, 2, 2))
    for k, (r, s) in enumerate(zip(params.r, orig.sigma)):
        am, ap = eigenvalues(r)
        out[k] = np.diag([am, ap]) / s**2
    return out


def _apply_blockwise(theta: Macrostate, params: ModelParams, attr: str) -> np.ndarray:
    out = np.empty_like(theta.coords)
    for k, r in enumerate(params.r):
        mat = getattr(block_eigen(r), attr)
        out[2 * k:2 * k + 2] = mat @ theta.coords[2 * k:2 * k + 2]
    return out


def original_from_diagonal(theta: Macrostate, params: ModelParams) -> Macrostate:
    """``mu = mu~ + sigma~``, ``sigma = a0 mu~ + a1 sigma~`` per block."""
    check_compatible(theta, params, Chart.DIAGONAL)
    coords = _apply_blockwise(theta, params, "E")
    bad = np.flatnonzero(coords[1::2] <= 0.0)
    if bad.size:
        k = int(bad[0])
        raise RangeError(f"image leaves the manifold: sigma[{k}] = {coords[2 * k + 1]!r} <= 0")
    return Macrostate(Chart.ORIGINAL, coords)


def diagonal_from_original(theta: Macrostate, params: ModelParams) -> Macrostate:
    check_compatible(theta, params, Chart.ORIGINAL)
    return Macrostate(Chart.DIAGONAL, _apply_blockwise(theta, params, "E_inv"))


def canonical_from_diagonal(theta: Macrostate, params: ModelParams) -> Macrostate:
    check_compatible(theta, params, Chart.DIAGONAL)
    coords = np.array(theta.coords)
    for k, r in enumerate(params.r):
        coords[2 * k] *= mu_scale(r)
    return Macrostate(Chart.CANONICAL, coords)


def diagonal_from_canonical(theta: Macrostate, params: ModelParams) -> Macrostate:
    check_compatible(theta, params, Chart.CANONICAL)
    coords = np.array(theta.coords)
    for k, r in enumerate(params.r):
        coords[2 * k] /= mu_scale(r)
    return Macrostate(Chart.DIAGONAL, coords)


def vector_to_chart(vec, params: ModelParams, source: Chart, target: Chart) -> np.ndarray:
    """Push a tangent vector (2l components) between charts.

    All chart maps are linear, so velocities transform with the same matrices
    as positions and no manifold-membership check applies.
    """
    v = np.array(vec, dtype=float).reshape(-1)
    order = [Chart.ORIGINAL, Chart.DIAGONAL, Chart.CANONICAL]
    i, j = order.index(source), order.index(target)
    step = 1 if j > i else -1
    while i != j:
        nxt = i + step
        for k, r in enumerate(params.r):
            blk = v[2 * k:2 * k + 2]
            if (i, nxt) == (0, 1):
                v[2 * k:2 * k + 2] = block_eigen(r).E_inv @ blk
            elif (i, nxt) == (1, 0):
                v[2 * k:2 * k + 2] = block_eigen(r).E @ blk
            elif (i, nxt) == (1, 2):
                v[2 * k] *= mu_scale(r)
            else:
                v[2 * k] /= mu_scale(r)
        i = nxt
    return v


def min_a1_over_a0(n: int = 100_000) -> float:
    """Grid minimum of ``|a1/a0|`` over r in (0, 1); approaches (1+sqrt5)/(sqrt5-1) at r -> 1."""
    r = np.linspace(R_MIN, 1.0, n + 1)[1:-1]
    s = np.sqrt(1.0 + 4.0 * r * r)
    return float(np.min(np.abs((1.0 + s) / (1.0 - s))))
