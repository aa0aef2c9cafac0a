"""
Market Models
GBM and stochastic-volatility Monte Carlo path generation with per-path seeding

Every path draws its normals from its own Philox substream keyed by
(seed, path_index), so adding paths never reshuffles the earlier ones.
Normals come from ``Generator.standard_normal`` (numpy's ziggurat sampler).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from hedger.errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-8


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_steps`` intervals over ``[0, maturity]`` (years)."""

    maturity: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.maturity) and self.maturity > 0):
            raise ParameterError(f"maturity must be positive, got {self.maturity}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ParameterError(f"n_steps must be an integer >= 1, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.maturity / self.n_steps

    @property
    def times(self) -> np.ndarray:
        # maturity * i / N keeps the last knot exactly at maturity
        return self.maturity * np.arange(self.n_steps + 1) / self.n_steps

    def time_at(self, step: int) -> float:
        return self.maturity * step / self.n_steps


@dataclass(frozen=True)
class GbmParams:
    s0: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ParameterError(f"s0 must be positive, got {self.s0}")
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be non-negative, got {self.sigma}")


@dataclass(frozen=True)
class SvParams:
    """Lognormal vol-of-vol model with drift (beta fixed at 1)."""

    s0: float
    mu: float
    sigma0: float
    nu: float
    rho: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ParameterError(f"s0 must be positive, got {self.s0}")
        if not self.sigma0 > 0:
            raise ParameterError(f"sigma0 must be positive, got {self.sigma0}")
        if not self.nu >= 0:
            raise ParameterError(f"nu must be non-negative, got {self.nu}")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [-1, 1], got {self.rho}")


ModelParams = Union[GbmParams, SvParams]


@dataclass(frozen=True)
class PathSet:
    """Batch of simulated trajectories sharing one time grid.

    ``prices`` and ``vols`` are ``n_paths x (N+1)`` and read-only.
    ``clamped`` counts entries raised to the positivity floor.
    """

    grid: TimeGrid
    prices: np.ndarray
    vols: Optional[np.ndarray] = None
    seed: int = 0
    clamped: int = field(default=0, compare=False)

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape[1] != self.grid.n_steps + 1:
            raise ParameterError(
                f"prices must be n_paths x {self.grid.n_steps + 1}, got {prices.shape}"
            )
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        if self.vols is not None:
            vols = np.array(self.vols, dtype=float)
            if vols.shape != prices.shape:
                raise ParameterError(f"vols shape {vols.shape} != prices shape {prices.shape}")
            vols.setflags(write=False)
            object.__setattr__(self, "vols", vols)

    @property
    def n_paths(self) -> int:
        return self.prices.shape[0]

    def path(self, index: int) -> "PathSet":
        """Single-path view (still a PathSet) for per-path runs."""
        vols = None if self.vols is None else self.vols[index : index + 1]
        return PathSet(self.grid, self.prices[index : index + 1], vols, self.seed)


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """Philox substream for one path, derived from (seed, path_index) only."""
    if seed < 0 or path_index < 0:
        raise ParameterError("seed and path_index must be non-negative")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(sequence))


def draw_normals(seed: int, n_paths: int, n_steps: int, n_factors: int = 1) -> np.ndarray:
    """Standard normals shaped ``(n_paths, n_factors, n_steps)``."""
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    out = np.empty((n_paths, n_factors, n_steps))
    for i in range(n_paths):
        out[i] = path_generator(seed, i).standard_normal((n_factors, n_steps))
    return out


def gbm_prices_from_normals(params: GbmParams, grid: TimeGrid, z: np.ndarray) -> np.ndarray:
    """Exact lognormal stepping S * exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z)."""
    dt = grid.dt
    increments = (params.mu - 0.5 * params.sigma**2) * dt + params.sigma * math.sqrt(dt) * z
    log_paths = np.concatenate(
        [np.zeros((z.shape[0], 1)), np.cumsum(increments, axis=1)], axis=1
    )
    return params.s0 * np.exp(log_paths)


def correlated_increments(
    z1: np.ndarray, z2: np.ndarray, rho: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Return (dW, dB) with corr(dW, dB) = rho."""
    sqrt_dt = math.sqrt(dt)
    d_w = sqrt_dt * z1
    d_b = sqrt_dt * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
    return d_w, d_b


def _sv_euler(
    params: SvParams, grid: TimeGrid, z1: np.ndarray, z2: np.ndarray, floor: Optional[float]
) -> tuple[np.ndarray, np.ndarray, int]:
    n_paths, n_steps = z1.shape
    dt = grid.dt
    d_w, d_b = correlated_increments(z1, z2, params.rho, dt)

    prices = np.empty((n_paths, n_steps + 1))
    vols = np.empty((n_paths, n_steps + 1))
    prices[:, 0] = params.s0
    vols[:, 0] = params.sigma0
    clamped = 0
    for n in range(1, n_steps + 1):
        vols[:, n] = vols[:, n - 1] * (1.0 + params.nu * d_b[:, n - 1])
        if floor is not None:
            low = vols[:, n] < floor
            clamped += int(np.count_nonzero(low))
            vols[low, n] = floor
        prices[:, n] = prices[:, n - 1] * (1.0 + params.mu * dt + vols[:, n] * d_w[:, n - 1])
        if floor is not None:
            low = prices[:, n] < floor
            clamped += int(np.count_nonzero(low))
            prices[low, n] = floor
    return prices, vols, clamped


def sv_paths_from_normals(
    params: SvParams, grid: TimeGrid, z1: np.ndarray, z2: np.ndarray, floor: Optional[float] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Explicit Euler stepping of the price/vol pair, vectorised over paths.

    With ``floor`` set, each new vol and price is floored before the next step uses it.
    """
    prices, vols, _ = _sv_euler(params, grid, z1, z2, floor)
    return prices, vols


def simulate_gbm(params: GbmParams, grid: TimeGrid, n_paths: int, seed: int) -> PathSet:
    z = draw_normals(seed, n_paths, grid.n_steps, 1)[:, 0, :]
    prices = gbm_prices_from_normals(params, grid, z)
    logger.debug(f"[Paths] GBM: {n_paths} paths x {grid.n_steps} steps (seed={seed})")
    return PathSet(grid, prices, None, seed)


def simulate_sv(
    params: SvParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    floor: Optional[float] = DEFAULT_FLOOR,
) -> PathSet:
    """Simulate the SV model; ``floor=None`` keeps the raw Euler output."""
    if floor is not None and not floor > 0:
        raise ParameterError(f"floor must be positive, got {floor}")
    z = draw_normals(seed, n_paths, grid.n_steps, 2)
    prices, vols, clamped = _sv_euler(params, grid, z[:, 0, :], z[:, 1, :], floor)
    logger.debug(f"[Paths] SV: {n_paths} paths x {grid.n_steps} steps (seed={seed})")
    if clamped:
        logger.warning(f"[Paths] ⚠ Floored {clamped} non-positive entries at {floor:g}")
    return PathSet(grid, prices, vols, seed, clamped=clamped)


def simulate(params: ModelParams, grid: TimeGrid, n_paths: int, seed: int) -> PathSet:
    if isinstance(params, SvParams):
        return simulate_sv(params, grid, n_paths, seed)
    return simulate_gbm(params, grid, n_paths, seed)


def simulate_path(params: ModelParams, grid: TimeGrid, seed: int, path_index: int) -> PathSet:
    """Path ``path_index`` of ``simulate(params, grid, n, seed)`` for any n > path_index."""
    n_factors = 2 if isinstance(params, SvParams) else 1
    z = path_generator(seed, path_index).standard_normal((n_factors, grid.n_steps))
    if isinstance(params, SvParams):
        prices, vols, clamped = _sv_euler(params, grid, z[0:1], z[1:2], DEFAULT_FLOOR)
        return PathSet(grid, prices, vols, seed, clamped=clamped)
    return PathSet(grid, gbm_prices_from_normals(params, grid, z[0:1]), None, seed)


def floor_paths(paths: PathSet, eps: float = DEFAULT_FLOOR) -> PathSet:
    """Clamp prices (and vols) below at ``eps``; the count lands in ``clamped``."""
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")

    n_clamped = int(np.count_nonzero(paths.prices < eps))
    prices = np.maximum(paths.prices, eps)
    vols = None
    if paths.vols is not None:
        n_clamped += int(np.count_nonzero(paths.vols < eps))
        vols = np.maximum(paths.vols, eps)

    if n_clamped:
        logger.warning(f"[Paths] ⚠ Floored {n_clamped} non-positive entries at {eps:g}")
    return PathSet(paths.grid, prices, vols, paths.seed, clamped=paths.clamped + n_clamped)
