"""
Dynamic Chebyshev Pricer
Backward induction of the American put value on a (ln S, sigma) tensor grid of
Chebyshev-Lobatto nodes, with barycentric interpolation for queries

Offline build:
1. Terminal values are the put payoff at every node.
2. From each node, one-step SV transitions are simulated under the pricing
   drift r; the next step's surface is evaluated at the landed states
   (exact payoff at the last step) and discounted to a continuation value.
3. The node value is max(intrinsic, continuation); nodes where intrinsic wins
   locate the exercise boundary per (step, vol node).

One-step draws are shared by all nodes of a time step and moment matched
(zero mean, unit variance, uncorrelated factors) before use.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from hedger.clamping import ClampStats
from hedger.errors import DomainError, ParameterError
from hedger.market_models import SvParams, TimeGrid, correlated_increments, simulate_sv
from hedger.pricers.base import ArrayLike

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_NODES = (50, 20)
DEFAULT_MC_PER_NODE = 1000
_HIT_TOL = 1e-13
_CHUNK_ROWS = 200_000

BoundaryMethod = Literal["midpoint", "root"]


# ============================================================================
# Nodes and barycentric evaluation
# ============================================================================

def cheb_nodes(a: float, b: float, n: int) -> np.ndarray:
    """Chebyshev-Lobatto points (a+b)/2 + (b-a)/2 cos(k pi / n), k = 0..n, ascending."""
    if not a < b:
        raise ParameterError(f"need a < b, got [{a}, {b}]")
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n}")
    k = np.arange(n, -1, -1)
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(k * math.pi / n)
    nodes[0], nodes[-1] = a, b
    return nodes


def lobatto_weights(n: int) -> np.ndarray:
    weights = np.where(np.arange(n + 1) % 2 == 0, 1.0, -1.0)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return weights


def _clamp(x: np.ndarray, lo: float, hi: float, stats: Optional[ClampStats]) -> np.ndarray:
    if stats is not None:
        stats.record(x.size, np.count_nonzero((x < lo) | (x > hi)))
    return np.clip(x, lo, hi)


def barycentric_basis(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rows of Lagrange basis values l_j(x) for each query (one-hot on exact hits)."""
    weights = lobatto_weights(len(nodes) - 1)
    diff = x[:, None] - nodes[None, :]
    scale = max(abs(nodes[0]), abs(nodes[-1]), 1.0)
    hits = np.abs(diff) <= _HIT_TOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights / np.where(hits, 1.0, diff)
    basis = terms / terms.sum(axis=1, keepdims=True)
    hit_rows = hits.any(axis=1)
    if hit_rows.any():
        basis[hit_rows] = hits[hit_rows].astype(float)
    return basis


def cheb_eval(
    values: np.ndarray, nodes: np.ndarray, x: ArrayLike, stats: Optional[ClampStats] = None
) -> ArrayLike:
    """Barycentric interpolation over Lobatto ``nodes``; exact for degree <= n."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    x_arr = _clamp(x_arr, nodes[0], nodes[-1], stats)
    out = barycentric_basis(nodes, x_arr) @ np.asarray(values, dtype=float)
    return float(out[0]) if np.ndim(x) == 0 else out


def cheb_eval_2d(
    values: np.ndarray,
    x_nodes: np.ndarray,
    y_nodes: np.ndarray,
    x: ArrayLike,
    y: ArrayLike,
    stats: Optional[ClampStats] = None,
) -> ArrayLike:
    """Tensor barycentric interpolation of ``values[i, j]`` at points (x, y)."""
    x_arr, y_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
    )
    x_arr = _clamp(x_arr.ravel(), x_nodes[0], x_nodes[-1], stats)
    y_arr = _clamp(y_arr.ravel(), y_nodes[0], y_nodes[-1], stats)
    out = np.empty(x_arr.size)
    for start in range(0, x_arr.size, _CHUNK_ROWS):
        stop = start + _CHUNK_ROWS
        bx = barycentric_basis(x_nodes, x_arr[start:stop])
        by = barycentric_basis(y_nodes, y_arr[start:stop])
        out[start:stop] = np.einsum("mi,ij,mj->m", bx, values, by)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    return float(out[0]) if scalar else out


# ============================================================================
# Domain
# ============================================================================

@dataclass(frozen=True)
class ChebDomain:
    s_lo: float
    s_hi: float
    v_lo: float
    v_hi: float
    n_s: int
    n_v: int
    grid: TimeGrid

    def __post_init__(self):
        if not (0 < self.s_lo < self.s_hi):
            raise ParameterError(f"need 0 < s_lo < s_hi, got [{self.s_lo}, {self.s_hi}]")
        if not (0 < self.v_lo < self.v_hi):
            raise ParameterError(f"need 0 < v_lo < v_hi, got [{self.v_lo}, {self.v_hi}]")
        if self.n_s < 4 or self.n_v < 2:
            raise ParameterError(f"need n_s >= 4 and n_v >= 2, got ({self.n_s}, {self.n_v})")

    @property
    def log_price_nodes(self) -> np.ndarray:
        return cheb_nodes(math.log(self.s_lo), math.log(self.s_hi), self.n_s)

    @property
    def price_nodes(self) -> np.ndarray:
        return np.exp(self.log_price_nodes)

    @property
    def vol_nodes(self) -> np.ndarray:
        return cheb_nodes(self.v_lo, self.v_hi, self.n_v)


def _buffered(lo: float, hi: float, center: float, buffer: float) -> tuple[float, float]:
    if hi - lo <= 1e-12 * max(abs(center), 1.0):
        return 0.8 * center, 1.2 * center
    return lo * (1.0 - buffer), hi * (1.0 + buffer)


def make_domain(
    params: SvParams,
    grid: TimeGrid,
    pilot_paths: int = 1000,
    buffer: float = 0.10,
    nodes: tuple[int, int] = DEFAULT_NODES,
    seed: int = 0,
) -> ChebDomain:
    """Bounds from the extremal excursions of a pilot simulation, then buffered."""
    if pilot_paths < 100:
        raise ParameterError(f"pilot_paths must be >= 100, got {pilot_paths}")
    if not 0 <= buffer < 1:
        raise ParameterError(f"buffer must lie in [0, 1), got {buffer}")
    pilot = simulate_sv(params, grid, pilot_paths, seed)
    s_lo, s_hi = _buffered(float(pilot.prices.min()), float(pilot.prices.max()), params.s0, buffer)
    v_lo, v_hi = _buffered(float(pilot.vols.min()), float(pilot.vols.max()), params.sigma0, buffer)
    domain = ChebDomain(s_lo, s_hi, v_lo, v_hi, int(nodes[0]), int(nodes[1]), grid)
    logger.info(
        f"[Chebyshev] Domain S in [{s_lo:.2f}, {s_hi:.2f}], sigma in [{v_lo:.4f}, {v_hi:.4f}], "
        f"nodes {nodes}"
    )
    return domain


# ============================================================================
# Surface
# ============================================================================

@dataclass(frozen=True)
class ChebBoundary:
    """Critical price per (time step, vol node), interpolated in sigma then t."""

    times: np.ndarray
    vol_nodes: np.ndarray
    critical: np.ndarray
    no_exercise: np.ndarray
    strike: float
    default_vol: float

    def critical_price(self, t: float, v: Optional[ArrayLike] = None) -> ArrayLike:
        vol = self.default_vol if v is None else v
        vol_arr = np.atleast_1d(np.asarray(vol, dtype=float))
        x = float(np.interp(t, self.times, np.arange(len(self.times))))
        j0 = min(int(math.floor(x)), len(self.times) - 1)
        w = x - j0
        b = np.interp(vol_arr, self.vol_nodes, self.critical[j0])
        if w > 0:
            b = (1.0 - w) * b + w * np.interp(vol_arr, self.vol_nodes, self.critical[j0 + 1])
        return float(b[0]) if np.ndim(vol) == 0 else b

    def to_frame(self, vol: Optional[float] = None) -> pd.DataFrame:
        vol = self.default_vol if vol is None else vol
        return pd.DataFrame(
            {
                "step": np.arange(len(self.times)),
                "t": self.times,
                "critical_price": [self.critical_price(t, vol) for t in self.times],
            }
        )


@dataclass
class ChebSurface:
    domain: ChebDomain
    params: SvParams
    k: float
    r: float
    values: np.ndarray
    boundary: ChebBoundary
    mc_per_node: int
    seed: int
    clamp_stats: ClampStats = field(default_factory=ClampStats, compare=False)

    @property
    def strike(self) -> float:
        return self.k

    def price(self, s: ArrayLike, t: float, v: Optional[ArrayLike] = None) -> ArrayLike:
        return price_query(self, s, self.params.sigma0 if v is None else v, t)

    def to_arrays(self) -> dict:
        d, p = self.domain, self.params
        return {
            "format_version": np.array(FORMAT_VERSION),
            "domain": np.array([d.s_lo, d.s_hi, d.v_lo, d.v_hi, d.n_s, d.n_v, d.grid.maturity, d.grid.n_steps]),
            "params": np.array([p.s0, p.mu, p.sigma0, p.nu, p.rho]),
            "scalars": np.array([self.k, self.r, self.mc_per_node, self.seed]),
            "values": self.values,
            "boundary_critical": self.boundary.critical,
            "boundary_no_exercise": self.boundary.no_exercise,
        }

    @classmethod
    def from_arrays(cls, arrays: dict) -> "ChebSurface":
        if int(arrays["format_version"]) != FORMAT_VERSION:
            raise ParameterError(f"unsupported surface format {int(arrays['format_version'])}")
        s_lo, s_hi, v_lo, v_hi, n_s, n_v, maturity, n_steps = arrays["domain"]
        grid = TimeGrid(float(maturity), int(n_steps))
        domain = ChebDomain(float(s_lo), float(s_hi), float(v_lo), float(v_hi), int(n_s), int(n_v), grid)
        params = SvParams(*(float(x) for x in arrays["params"]))
        k, r, mc, seed = arrays["scalars"]
        boundary = ChebBoundary(
            grid.times, domain.vol_nodes, arrays["boundary_critical"],
            arrays["boundary_no_exercise"].astype(bool), float(k), params.sigma0,
        )
        return cls(domain, params, float(k), float(r), arrays["values"], boundary, int(mc), int(seed))


def _step_draws(seed: int, step: int, mc: int, rho: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(step),))))
    z = rng.standard_normal((2, mc))
    z -= z.mean(axis=1, keepdims=True)
    z[0] /= z[0].std()
    z[1] -= (z[1] @ z[0]) / (z[0] @ z[0]) * z[0]
    z[1] /= z[1].std()
    return correlated_increments(z[0], z[1], rho, dt)


def _critical_price(
    exercise: np.ndarray,
    continuation: np.ndarray,
    log_nodes: np.ndarray,
    k: float,
    method: BoundaryMethod,
) -> Optional[float]:
    if not exercise.any():
        return None
    top = int(np.flatnonzero(exercise).max())
    if top == len(log_nodes) - 1:
        return min(math.exp(log_nodes[top]), k)
    lo, hi = log_nodes[top], log_nodes[top + 1]
    if method == "root":
        gap = lambda x: cheb_eval(continuation, log_nodes, x) - (k - math.exp(x))
        if gap(lo) < 0 <= gap(hi):
            return min(math.exp(brentq(gap, lo, hi, xtol=1e-12)), k)
    return min(0.5 * (math.exp(lo) + math.exp(hi)), k)


def build_surface(
    params: SvParams,
    k: float,
    r: float,
    grid: TimeGrid,
    domain: ChebDomain,
    mc_per_node: int = DEFAULT_MC_PER_NODE,
    seed: int = 0,
    boundary_method: BoundaryMethod = "midpoint",
) -> ChebSurface:
    if mc_per_node < 100:
        raise ParameterError(f"mc_per_node must be >= 100, got {mc_per_node}")
    if grid != domain.grid:
        raise ParameterError("surface grid must match the domain grid")

    xs = domain.log_price_nodes
    vs = domain.vol_nodes
    s_nodes = np.exp(xs)
    n = grid.n_steps
    dt = grid.dt
    discount = math.exp(-r * dt)
    intrinsic = np.maximum(k - s_nodes, 0.0)

    values = np.empty((n + 1, len(xs), len(vs)))
    values[n] = intrinsic[:, None]
    critical = np.zeros((n + 1, len(vs)))
    no_exercise = np.ones((n + 1, len(vs)), dtype=bool)
    critical[n] = k
    no_exercise[n] = False
    stats = ClampStats()

    for step in range(n - 1, -1, -1):
        d_w, d_b = _step_draws(seed, step, mc_per_node, params.rho, dt)
        continuation = np.empty((len(xs), len(vs)))
        for j, v in enumerate(vs):
            v_next = v * (1.0 + params.nu * d_b)
            growth = 1.0 + r * dt + v_next * d_w
            s_next = s_nodes[:, None] * growth[None, :]
            if step == n - 1:
                landed = np.maximum(k - s_next, 0.0)
            else:
                s_clamped = _clamp(s_next.ravel(), domain.s_lo, domain.s_hi, stats)
                v_clamped = _clamp(v_next, domain.v_lo, domain.v_hi, stats)
                bx = barycentric_basis(xs, np.log(s_clamped))
                by = barycentric_basis(vs, v_clamped)
                partial = (bx @ values[step + 1]).reshape(len(xs), mc_per_node, len(vs))
                landed = np.einsum("imj,mj->im", partial, by)
            continuation[:, j] = discount * landed.mean(axis=1)

        exercise = (intrinsic[:, None] > continuation) & (intrinsic[:, None] > 0)
        values[step] = np.where(exercise, intrinsic[:, None], continuation)
        for j in range(len(vs)):
            b = _critical_price(exercise[:, j], continuation[:, j], xs, k, boundary_method)
            if b is not None:
                critical[step, j] = b
                no_exercise[step, j] = False

    # states land once per price node but vols are clamped once per draw
    stats.warn_if_above(0.01, "Chebyshev")
    boundary = ChebBoundary(grid.times, vs, critical, no_exercise, float(k), params.sigma0)
    surface = ChebSurface(domain, params, float(k), float(r), values, boundary, int(mc_per_node), int(seed))
    surface.clamp_stats.record(stats.total, stats.clamped)
    logger.info(
        f"[Chebyshev] ✓ Built surface: {n} steps, {len(xs)}x{len(vs)} nodes, "
        f"{mc_per_node} draws/node, clamped {stats.fraction:.2%}"
    )
    return surface


def price_query(surface: ChebSurface, s: ArrayLike, v: ArrayLike, t: float) -> ArrayLike:
    """Tensor interpolation in (ln s, sigma), linear in t, floored at intrinsic."""
    grid = surface.domain.grid
    if t < 0 or t > grid.maturity * (1 + 1e-12):
        raise DomainError(f"t must lie in [0, {grid.maturity}], got {t}")
    s_arr, v_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(s, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))
    )
    intrinsic = np.maximum(surface.k - s_arr, 0.0)
    scalar = np.ndim(s) == 0 and np.ndim(v) == 0
    if t >= grid.maturity:
        return float(intrinsic[0]) if scalar else intrinsic

    xs = surface.domain.log_price_nodes
    vs = surface.domain.vol_nodes
    x = t / grid.dt
    if abs(x - round(x)) < 1e-9 * max(1.0, x):
        x = float(round(x))
    j0 = min(int(math.floor(x)), grid.n_steps)
    w = x - j0
    log_s = np.log(np.maximum(s_arr, 1e-300))
    value = cheb_eval_2d(surface.values[j0], xs, vs, log_s, v_arr, surface.clamp_stats)
    if w > 0:
        upper = cheb_eval_2d(surface.values[j0 + 1], xs, vs, log_s, v_arr, surface.clamp_stats)
        value = (1.0 - w) * value + w * upper
    value = np.maximum(np.reshape(value, s_arr.shape), intrinsic)
    return float(value[0]) if scalar else value
