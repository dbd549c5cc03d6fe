"""Levi-Civita connection and Ricci curvature of the correlated Gaussian manifold.

Closed forms live next to finite-difference oracles built only from
:func:`igeo.manifold.metric_tensor`. Index 0 within a block is mu, index 1 is
sigma; arrays use ``gamma[block, upper, lower_i, lower_j]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .manifold import (
    Chart,
    Macrostate,
    ModelParams,
    check_compatible,
    inverse_metric,
    inverse_metric_block,
    metric_tensor,
)

DEFAULT_FD_STEP = 1e-5
DEFAULT_RICCI_FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    gamma: np.ndarray  # (l, 2, 2, 2)

    @property
    def l(self) -> int:
        return self.gamma.shape[0]

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.gamma, np.swapaxes(self.gamma, 2, 3)))

    def nonzero_count(self, atol: float = 0.0) -> np.ndarray:
        """Number of entries with ``|Gamma| > atol`` per block."""
        return np.count_nonzero(np.abs(self.gamma) > atol, axis=(1, 2, 3))


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    components: np.ndarray  # (l, 3): R_11, R_12, R_22 per block
    scalar: float
    r_used: tuple[float, ...]

    def block_matrix(self, k: int) -> np.ndarray:
        r11, r12, r22 = self.components[k]
        return np.array([[r11, r12], [r12, r22]])


def christoffel_block(r: float, sigma: float) -> np.ndarray:
    """Closed-form ``Gamma[upper, i, j]`` for one block. Valid at r = 0 too."""
    if not sigma > 0.0:
        raise DomainError(f"sigma = {sigma!r} must be > 0")
    c = 1.0 / ((2.0 - r * r) * sigma)
    g = np.empty((2, 2, 2))
    g[0, 0, 0] = -r * c
    g[0, 0, 1] = g[0, 1, 0] = -2.0 * c
    g[0, 1, 1] = -2.0 * r * c
    g[1, 0, 0] = c
    g[1, 0, 1] = g[1, 1, 0] = r * c
    g[1, 1, 1] = (2.0 * r * r - 2.0) * c
    return g


def christoffel_analytic(theta: Macrostate, params: ModelParams) -> ChristoffelField:
    check_compatible(theta, params)
    gamma = np.stack([christoffel_block(r, s) for r, s in zip(params.r, theta.sigma)])
    return ChristoffelField(gamma)


def _metric_derivatives(theta: Macrostate, params: ModelParams, h: float) -> np.ndarray:
    """Central differences ``dg[m, i, j] = d g_ij / d theta^m`` of the dense metric."""
    n = theta.coords.size
    dg = np.empty((n, n, n))
    for m in range(n):
        step = np.zeros(n)
        step[m] = h
        plus = metric_tensor(Macrostate(Chart.ORIGINAL, theta.coords + step), params).dense()
        minus = metric_tensor(Macrostate(Chart.ORIGINAL, theta.coords - step), params).dense()
        dg[m] = (plus - minus) / (2.0 * h)
    return dg


def _check_stencil(theta: Macrostate, h: float) -> None:
    if not h > 0.0:
        raise DomainError(f"finite-difference step h = {h!r} must be > 0")
    bad = np.flatnonzero(theta.sigma - h <= 0.0)
    if bad.size:
        k = int(bad[0])
        raise DomainError(f"stencil leaves the domain: sigma[{k}] - h <= 0")


def christoffel_numeric(theta: Macrostate, params: ModelParams,
                        h: float = DEFAULT_FD_STEP) -> ChristoffelField:
    """Connection from the metric by central differences.

    Gamma^k_ij = 1/2 g^km (d_i g_mj + d_j g_im - d_m g_ij), evaluated on the
    full 2l x 2l metric and then split back into blocks.
    """
    check_compatible(theta, params)
    _check_stencil(theta, h)
    dg = _metric_derivatives(theta, params, h)
    ginv = inverse_metric(theta, params).dense()
    # first kind: G[m, i, j] = 1/2 (d_i g_mj + d_j g_im - d_m g_ij)
    first = 0.5 * (np.einsum("imj->mij", dg) + np.einsum("jim->mij", dg) - dg)
    full = np.einsum("km,mij->kij", ginv, first)
    gamma = np.stack([full[2 * b:2 * b + 2, 2 * b:2 * b + 2, 2 * b:2 * b + 2]
                      for b in range(params.l)])
    return ChristoffelField(gamma)


def ricci_block(r: float, sigma: float) -> tuple[float, float, float]:
    """``(R_11, R_12, R_22)`` for one block; valid at r = 0."""
    if not sigma > 0.0:
        raise DomainError(f"sigma = {sigma!r} must be > 0")
    c = -1.0 / ((2.0 - r * r) * sigma**2)
    return c, r * c, 2.0 * c


def ricci_tensor(theta: Macrostate, params: ModelParams) -> CurvatureReport:
    check_compatible(theta, params)
    comps = np.array([ricci_block(r, s) for r, s in zip(params.r, theta.sigma)])
    return CurvatureReport(comps, scalar_curvature(params), params.r)


def ricci_numeric(theta: Macrostate, params: ModelParams, h: float = DEFAULT_RICCI_FD_STEP,
                  inner_h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Ricci components ``(l, 3)`` from the defining contraction of the connection.

    R_ij = d_k Gamma^k_ij - d_j Gamma^k_ik + Gamma^k_ij Gamma^n_kn - Gamma^m_ik Gamma^k_jm,
    with Gamma from :func:`christoffel_numeric` and its derivatives taken by a
    second layer of central differences (step ``h``).
    """
    check_compatible(theta, params)
    _check_stencil(theta, h + inner_h)
    out = np.empty((params.l, 3))
    base = christoffel_numeric(theta, params, inner_h).gamma
    for b in range(params.l):
        gam = base[b]
        dgam = np.empty((2, 2, 2, 2))  # dgam[m, k, i, j] = d_m Gamma^k_ij
        for m in range(2):
            step = np.zeros(theta.coords.size)
            step[2 * b + m] = h
            gp = christoffel_numeric(Macrostate(Chart.ORIGINAL, theta.coords + step), params, inner_h)
            gm = christoffel_numeric(Macrostate(Chart.ORIGINAL, theta.coords - step), params, inner_h)
            dgam[m] = (gp.gamma[b] - gm.gamma[b]) / (2.0 * h)
        ric = (np.einsum("kkij->ij", dgam)
               - np.einsum("jkik->ij", dgam)
               + np.einsum("kij,nkn->ij", gam, gam)
               - np.einsum("mik,kjm->ij", gam, gam))
        out[b] = ric[0, 0], 0.5 * (ric[0, 1] + ric[1, 0]), ric[1, 1]
    return out


def scalar_curvature_from_r(r) -> float:
    """``-2 sum_k 1/(2 - r_k^2)``; accepts r_k = 0 (uncorrelated baseline)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(np.abs(r) > 1.0):
        raise DomainError("correlation strengths must satisfy |r| <= 1")
    return float(-2.0 * np.sum(1.0 / (2.0 - r * r)))


def scalar_curvature(params: ModelParams) -> float:
    """Ricci scalar, constant over the manifold."""
    return scalar_curvature_from_r(params.r)


def contracted_scalar_curvature(theta: Macrostate, params: ModelParams) -> float:
    """``g^ij R_ij`` at a point; verification path for :func:`scalar_curvature`."""
    check_compatible(theta, params)
    total = 0.0
    for r, s in zip(params.r, theta.sigma):
        r11, r12, r22 = ricci_block(r, s)
        gi = inverse_metric_block(r, s)
        total += gi[0, 0] * r11 + 2.0 * gi[0, 1] * r12 + gi[1, 1] * r22
    return total
