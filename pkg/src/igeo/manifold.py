"""Parameter/state types and the Fisher-Rao metric of the macro-correlated Gaussian family.

Coordinates are interleaved per block, ``(mu_1, sigma_1, mu_2, sigma_2, ...)``,
so every 2x2 metric block acts on a contiguous slice.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ChartError, DomainError

# sigma**2 and sigma**4 stay finite and nonzero inside this window
_SIGMA_SAFE_MIN = 1e-75
_SIGMA_SAFE_MAX = 1e75


class Chart(enum.Enum):
    ORIGINAL = "original"
    DIAGONAL = "diagonal"
    CANONICAL = "canonical"


class DensityMode(enum.Enum):
    """Volume density convention.

    REDUCED uses sqrt(g) = sqrt(2 - r^2) / sigma per block, the density the
    complexity closed forms are built on. DETERMINANT uses sqrt(|det g|)
    = sqrt(2 - r^2) / sigma^2.
    """

    REDUCED = "reduced"
    DETERMINANT = "determinant"


def _as_float_tuple(name: str, values) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))
    except (TypeError, ValueError) as exc:
        raise ArgumentError(f"{name} must be a sequence of reals") from exc
    return out


@dataclass(frozen=True)
class ModelParams:
    """One model instance: correlation strengths and geodesic constants per block."""

    r: tuple[float, ...]
    lam: tuple[float, ...]
    xi: tuple[float, ...]
    l: int | None = None

    def __post_init__(self):
        r = _as_float_tuple("r", self.r)
        lam = _as_float_tuple("lambda", self.lam)
        xi = _as_float_tuple("xi", self.xi)
        l = len(r) if self.l is None else self.l
        if not isinstance(l, (int, np.integer)) or isinstance(l, bool) or l < 1:
            raise ArgumentError(f"l must be a positive integer, got {l!r}")
        for name, vec in (("r", r), ("lambda", lam), ("xi", xi)):
            if len(vec) != l:
                raise ArgumentError(f"{name} has length {len(vec)}, expected l={l}")
        for k, rk in enumerate(r):
            if not 0.0 < rk < 1.0:
                raise DomainError(f"r[{k}] = {rk!r} outside (0,1)")
        for name, vec in (("lambda", lam), ("xi", xi)):
            for k, v in enumerate(vec):
                if not (v > 0.0 and math.isfinite(v)):
                    raise DomainError(f"{name}[{k}] = {v!r} must be positive and finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "l", int(l))

    @classmethod
    def uniform(cls, l: int, r: float, lam: float = 1.0, xi: float = 1.0) -> "ModelParams":
        """``l`` identical blocks."""
        return cls(r=(r,) * l, lam=(lam,) * l, xi=(xi,) * l, l=l)

    @property
    def r_array(self) -> np.ndarray:
        return np.array(self.r)

    def block(self, k: int) -> tuple[float, float, float]:
        """``(r_k, lambda_k, xi_k)``."""
        return self.r[k], self.lam[k], self.xi[k]


@dataclass(frozen=True, eq=False)
class Macrostate:
    """A point on the manifold in one of the three charts.

    Arithmetic (``+``, ``-``, scalar ``*``) is allowed only between states
    carrying the same chart tag.
    """

    chart: Chart
    coords: np.ndarray = field(repr=True)

    def __post_init__(self):
        if not isinstance(self.chart, Chart):
            raise ArgumentError(f"chart must be a Chart, got {self.chart!r}")
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size == 0 or c.size % 2:
            raise ArgumentError(f"macrostate needs 2l coordinates, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise DomainError("macrostate coordinates must be finite")
        if self.chart is Chart.ORIGINAL:
            bad = np.flatnonzero(c[1::2] <= 0.0)
            if bad.size:
                k = int(bad[0])
                raise DomainError(f"sigma[{k}] = {c[2 * k + 1]!r} must be > 0")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_blocks(cls, chart: Chart, mu: Sequence[float], sigma: Sequence[float]) -> "Macrostate":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if mu.shape != sigma.shape:
            raise ArgumentError("mu and sigma must have the same length")
        c = np.empty(2 * mu.size)
        c[0::2] = mu
        c[1::2] = sigma
        return cls(chart, c)

    @property
    def l(self) -> int:
        return self.coords.size // 2

    @property
    def mu(self) -> np.ndarray:
        return self.coords[0::2]

    @property
    def sigma(self) -> np.ndarray:
        return self.coords[1::2]

    def _check_same_chart(self, other: "Macrostate") -> None:
        if not isinstance(other, Macrostate):
            raise ChartError(f"cannot combine Macrostate with {type(other).__name__}")
        if other.chart is not self.chart:
            raise ChartError(f"cannot combine {self.chart.value} and {other.chart.value} macrostates")
        if other.coords.size != self.coords.size:
            raise ArgumentError("macrostates have different dimensions")

    def __add__(self, other: "Macrostate") -> "Macrostate":
        self._check_same_chart(other)
        return Macrostate(self.chart, self.coords + other.coords)

    def __sub__(self, other: "Macrostate") -> "Macrostate":
        self._check_same_chart(other)
        return Macrostate(self.chart, self.coords - other.coords)

    def __mul__(self, scalar: float) -> "Macrostate":
        if isinstance(scalar, Macrostate):
            raise ChartError("macrostates can only be scaled by real numbers")
        return Macrostate(self.chart, self.coords * float(scalar))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Macrostate)
            and other.chart is self.chart
            and np.array_equal(other.coords, self.coords)
        )

    def __hash__(self):
        return hash((self.chart, self.coords.tobytes()))


@dataclass(frozen=True, eq=False)
class BlockMetric:
    """A block-diagonal 2l x 2l tensor stored as ``l`` 2x2 blocks, shape (l, 2, 2)."""

    blocks: np.ndarray
    chart: Chart = Chart.ORIGINAL

    def __post_init__(self):
        b = np.array(self.blocks, dtype=float)
        if b.ndim != 3 or b.shape[1:] != (2, 2):
            raise ArgumentError(f"blocks must have shape (l, 2, 2), got {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def l(self) -> int:
        return self.blocks.shape[0]

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.blocks, np.swapaxes(self.blocks, 1, 2)))

    def dense(self) -> np.ndarray:
        n = 2 * self.l
        out = np.zeros((n, n))
        for k, blk in enumerate(self.blocks):
            out[2 * k:2 * k + 2, 2 * k:2 * k + 2] = blk
        return out

    def determinant(self) -> float:
        return float(np.prod(np.linalg.det(self.blocks)))

    def __matmul__(self, other: "BlockMetric") -> "BlockMetric":
        if other.l != self.l:
            raise ArgumentError("block counts differ")
        return BlockMetric(self.blocks @ other.blocks, self.chart)


def check_compatible(theta: Macrostate, params: ModelParams, chart: Chart = Chart.ORIGINAL) -> None:
    if theta.chart is not chart:
        raise ChartError(f"expected a {chart.value} macrostate, got {theta.chart.value}")
    if theta.l != params.l:
        raise ArgumentError(f"macrostate has l={theta.l} blocks, params have l={params.l}")


def _warn_sigma_range(sigma: np.ndarray) -> None:
    if np.any(sigma < _SIGMA_SAFE_MIN) or np.any(sigma > _SIGMA_SAFE_MAX):
        warnings.warn(
            "sigma outside [1e-75, 1e75]; metric entries may under/overflow",
            RuntimeWarning,
            stacklevel=3,
        )


def metric_block(r: float, sigma: float) -> np.ndarray:
    """Single 2x2 block ``(1/sigma^2) [[1, r], [r, 2]]``; accepts r = 0."""
    if not sigma > 0.0:
        raise DomainError(f"sigma = {sigma!r} must be > 0")
    return np.array([[1.0, r], [r, 2.0]]) / sigma**2


def inverse_metric_block(r: float, sigma: float) -> np.ndarray:
    if not sigma > 0.0:
        raise DomainError(f"sigma = {sigma!r} must be > 0")
    return (sigma**2 / (2.0 - r * r)) * np.array([[2.0, -r], [-r, 1.0]])


def metric_tensor(theta: Macrostate, params: ModelParams) -> BlockMetric:
    """Fisher-Rao metric; block k is ``(1/sigma_k^2) [[1, r_k], [r_k, 2]]``."""
    check_compatible(theta, params)
    sigma = theta.sigma
    _warn_sigma_range(sigma)
    r = params.r_array
    s2 = sigma**2
    blocks = np.empty((params.l, 2, 2))
    blocks[:, 0, 0] = 1.0 / s2
    blocks[:, 0, 1] = blocks[:, 1, 0] = r / s2
    blocks[:, 1, 1] = 2.0 / s2
    return BlockMetric(blocks, Chart.ORIGINAL)


def inverse_metric(theta: Macrostate, params: ModelParams) -> BlockMetric:
    """Inverse metric; block k is ``sigma_k^2/(2 - r_k^2) [[2, -r_k], [-r_k, 1]]``."""
    check_compatible(theta, params)
    sigma = theta.sigma
    _warn_sigma_range(sigma)
    r = params.r_array
    f = sigma**2 / (2.0 - r * r)
    blocks = np.empty((params.l, 2, 2))
    blocks[:, 0, 0] = 2.0 * f
    blocks[:, 0, 1] = blocks[:, 1, 0] = -r * f
    blocks[:, 1, 1] = f
    return BlockMetric(blocks, Chart.ORIGINAL)


def line_element(theta: Macrostate, dtheta, params: ModelParams) -> float:
    """``ds^2 = sum_k (dmu^2 + 2 r dmu dsigma + 2 dsigma^2) / sigma^2``."""
    check_compatible(theta, params)
    d = np.asarray(dtheta, dtype=float).reshape(-1)
    if d.size != 2 * params.l:
        raise ArgumentError(f"displacement has {d.size} components, expected {2 * params.l}")
    dmu, dsig = d[0::2], d[1::2]
    r = params.r_array
    terms = (dmu * dmu + 2.0 * r * dmu * dsig + 2.0 * dsig * dsig) / theta.sigma**2
    return float(np.sum(terms))


def volume_density(theta: Macrostate, params: ModelParams,
                   mode: DensityMode = DensityMode.REDUCED) -> float:
    """Product over blocks of the per-block volume density (see :class:`DensityMode`)."""
    check_compatible(theta, params)
    r = params.r_array
    root = np.sqrt(2.0 - r * r)
    if mode is DensityMode.REDUCED:
        return float(np.prod(root / theta.sigma))
    if mode is DensityMode.DETERMINANT:
        return float(np.prod(root / theta.sigma**2))
    raise ArgumentError(f"unknown density mode {mode!r}")
