"""
Binomial Engine
Equal-probability recombining tree for the American put, its exercise boundary,
and interpolated prices / hedge ratios at arbitrary (S, t)

The tree is risk neutral: u, d = exp((r - sigma^2/2) dt +/- sigma sqrt(dt)), p = 1/2.
Only option values are stored (one array per step); asset levels and hedge
ratios are regenerated from the closed-form node lattice on demand. Every step
carries ``margin`` extra nodes on each side, so step j spans node indices
-margin..j+margin and prices at t = 0 vary with spot over about +/-width sigma sqrt(T).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import isotonic_regression

from hedger.clamping import ClampStats
from hedger.errors import DomainError, ParameterError
from hedger.market_models import TimeGrid
from hedger.pricers.base import ArrayLike

logger = logging.getLogger(__name__)

FORMAT_VERSION = 2
DEFAULT_WIDTH = 4.0
_SNAP = 1e-9


@dataclass(frozen=True)
class ExerciseBoundary:
    """Per-step critical price; 0 (with the flag set) where nobody exercises."""

    times: np.ndarray
    critical: np.ndarray
    no_exercise: np.ndarray
    strike: float

    def critical_price(self, t: float, v: Optional[ArrayLike] = None) -> ArrayLike:
        b = float(np.interp(t, self.times, self.critical))
        if v is None or np.ndim(v) == 0:
            return b
        return np.full(np.shape(v), b)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "step": np.arange(len(self.times)),
                "t": self.times,
                "critical_price": self.critical,
                "no_exercise": self.no_exercise,
            }
        )


@dataclass
class BinomialModel:
    grid: TimeGrid
    s0: float
    k: float
    r: float
    sigma: float
    up: float
    down: float
    values: list
    boundary: ExerciseBoundary
    margin: int = 0
    clamp_stats: ClampStats = field(default_factory=ClampStats, compare=False)

    @property
    def strike(self) -> float:
        return self.k

    @property
    def n_steps(self) -> int:
        return self.grid.n_steps

    @property
    def _drift(self) -> float:
        return (self.r - 0.5 * self.sigma**2) * self.grid.dt

    @property
    def _half_spacing(self) -> float:
        return self.sigma * math.sqrt(self.grid.dt)

    @property
    def root_value(self) -> float:
        """Tree value at (s0, 0)."""
        return float(self.values[0][self.margin])

    def asset_levels(self, step: int) -> np.ndarray:
        """S(step, i) = s0 u^i d^(step-i) for i = -margin..step+margin (ascending)."""
        return _lattice(self.s0, self._drift, self._half_spacing, self.margin, step)

    def hedge_ratios(self, step: int) -> np.ndarray:
        """Held position (Cu - Cd) / (Su - Sd) at every node of ``step`` < N."""
        if not 0 <= step < self.n_steps:
            raise DomainError(f"hedge ratios exist for steps 0..{self.n_steps - 1}, got {step}")
        children = self.values[step + 1]
        levels = self.asset_levels(step + 1)
        beta = (children[1:] - children[:-1]) / (levels[1:] - levels[:-1])
        return np.clip(beta, -1.0, 0.0)

    def price(self, s: ArrayLike, t: float, v: Optional[ArrayLike] = None) -> ArrayLike:
        return price_at(self, s, t)

    def _node_position(self, step: int, s: np.ndarray) -> np.ndarray:
        """Fractional node index of ``s`` on the ln-spaced lattice of ``step``."""
        y = (np.log(s / self.s0) - step * self._drift + step * self._half_spacing) / (
            2.0 * self._half_spacing
        ) + self.margin
        top = step + 2 * self.margin
        outside = (y < -_SNAP) | (y > top + _SNAP)
        self.clamp_stats.record(y.size, np.count_nonzero(outside))
        return np.clip(y, 0.0, top)

    def _interp_nodes(self, node_values: np.ndarray, step: int, s: np.ndarray) -> np.ndarray:
        y = self._node_position(step, s)
        i0 = np.minimum(np.floor(y).astype(int), node_values.size - 2)
        frac = y - i0
        return (1.0 - frac) * node_values[i0] + frac * node_values[i0 + 1]

    def to_arrays(self) -> dict:
        lengths = np.array([len(v) for v in self.values])
        return {
            "format_version": np.array(FORMAT_VERSION),
            "scalars": np.array(
                [self.grid.maturity, self.grid.n_steps, self.s0, self.k, self.r, self.sigma, self.margin]
            ),
            "values_flat": np.concatenate(self.values),
            "values_len": lengths,
            "boundary_critical": self.boundary.critical,
            "boundary_no_exercise": self.boundary.no_exercise,
        }

    @classmethod
    def from_arrays(cls, arrays: dict) -> "BinomialModel":
        if int(arrays["format_version"]) != FORMAT_VERSION:
            raise ParameterError(f"unsupported tree format {int(arrays['format_version'])}")
        maturity, n_steps, s0, k, r, sigma, margin = arrays["scalars"]
        grid = TimeGrid(float(maturity), int(n_steps))
        offsets = np.concatenate([[0], np.cumsum(arrays["values_len"])])
        flat = arrays["values_flat"]
        values = [flat[offsets[j] : offsets[j + 1]] for j in range(len(offsets) - 1)]
        drift = (r - 0.5 * sigma**2) * grid.dt
        spacing = sigma * math.sqrt(grid.dt)
        boundary = ExerciseBoundary(
            grid.times, arrays["boundary_critical"], arrays["boundary_no_exercise"].astype(bool), float(k)
        )
        return cls(
            grid, float(s0), float(k), float(r), float(sigma),
            math.exp(drift + spacing), math.exp(drift - spacing), values, boundary, int(margin),
        )


def _lattice(s0: float, drift: float, spacing: float, margin: int, step: int) -> np.ndarray:
    i = np.arange(-margin, step + margin + 1)
    return s0 * np.exp(step * drift + (2 * i - step) * spacing)


def _repair_boundary(critical: np.ndarray, no_exercise: np.ndarray, k: float) -> np.ndarray:
    """Isotonic (non-decreasing in t) fit over the steps where exercise occurs."""
    repaired = critical.copy()
    active = ~no_exercise
    if np.count_nonzero(active) > 1:
        repaired[active] = isotonic_regression(critical[active], increasing=True).x
    repaired[active] = np.minimum(repaired[active], k)
    repaired[-1] = k
    return repaired


def build_american_put(
    s0: float,
    k: float,
    r: float,
    sigma: float,
    grid: TimeGrid,
    n_tree_steps: int,
    width: float = DEFAULT_WIDTH,
) -> BinomialModel:
    """Backward induction on an ``n_tree_steps`` tree spanning ``grid.maturity``.

    ``width`` sets the spot coverage at t = 0 in units of sigma sqrt(T) either side of s0.
    """
    if int(n_tree_steps) != n_tree_steps or n_tree_steps < 1:
        raise ParameterError(f"n_tree_steps must be an integer >= 1, got {n_tree_steps}")
    if not s0 > 0:
        raise ParameterError(f"s0 must be positive, got {s0}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive for a recombining tree, got {sigma}")
    if k < 0:
        raise ParameterError(f"strike must be non-negative, got {k}")
    if not width > 0:
        raise ParameterError(f"width must be positive, got {width}")

    tree_grid = TimeGrid(grid.maturity, int(n_tree_steps))
    n = tree_grid.n_steps
    dt = tree_grid.dt
    drift = (r - 0.5 * sigma**2) * dt
    spacing = sigma * math.sqrt(dt)
    discount = math.exp(-r * dt)
    margin = math.ceil(0.5 * width * math.sqrt(n))

    def levels(step: int) -> np.ndarray:
        return _lattice(s0, drift, spacing, margin, step)

    values: list = [None] * (n + 1)
    critical = np.zeros(n + 1)
    no_exercise = np.ones(n + 1, dtype=bool)

    v = np.maximum(k - levels(n), 0.0)
    values[n] = v
    critical[n] = k
    no_exercise[n] = False

    for j in range(n - 1, -1, -1):
        s = levels(j)
        continuation = discount * 0.5 * (v[1:] + v[:-1])
        intrinsic = np.maximum(k - s, 0.0)
        exercise = intrinsic > continuation
        v = np.where(exercise, intrinsic, continuation)
        values[j] = v
        if exercise.any():
            top = int(np.flatnonzero(exercise).max())
            # midpoint between the highest exercising node and the next continuing one
            critical[j] = 0.5 * (s[top] + s[top + 1]) if top < len(s) - 1 else s[top]
            no_exercise[j] = False

    boundary = ExerciseBoundary(
        tree_grid.times, _repair_boundary(critical, no_exercise, k), no_exercise, float(k)
    )
    model = BinomialModel(
        tree_grid, float(s0), float(k), float(r), float(sigma),
        math.exp(drift + spacing), math.exp(drift - spacing), values, boundary, margin,
    )
    logger.info(f"[Binomial] ✓ Built {n}-step tree: V0={model.root_value:.4f} (K={k}, sigma={sigma})")
    return model


def _bracket(model: BinomialModel, t: float) -> tuple[int, float]:
    x = t / model.grid.dt
    if abs(x - round(x)) < _SNAP * max(1.0, x):
        x = float(round(x))
    j0 = min(int(math.floor(x)), model.n_steps)
    return j0, x - j0


def price_at(model: BinomialModel, s: ArrayLike, t: float) -> ArrayLike:
    """Bilinear interpolation in (ln s, t) over the bracketing steps and nodes, floored at intrinsic."""
    if t < 0 or t > model.grid.maturity * (1 + _SNAP):
        raise DomainError(f"t must lie in [0, {model.grid.maturity}], got {t}")
    s_arr = np.asarray(s, dtype=float)
    if t >= model.grid.maturity:
        out = np.maximum(model.k - s_arr, 0.0)
        return float(out) if out.ndim == 0 else out

    flat = np.atleast_1d(s_arr).astype(float)
    j0, w = _bracket(model, t)
    value = model._interp_nodes(model.values[j0], j0, flat)
    if w > 0:
        upper = model._interp_nodes(model.values[j0 + 1], j0 + 1, flat)
        value = (1.0 - w) * value + w * upper
    value = np.maximum(value, model.k - flat)
    return float(value[0]) if s_arr.ndim == 0 else value


def hedge_at(model: BinomialModel, s: ArrayLike, t: float) -> ArrayLike:
    """Tree hedge interpolated like ``price_at``; negative means short the asset."""
    if t < 0 or t >= model.grid.maturity:
        raise DomainError(f"hedge requires 0 <= t < {model.grid.maturity}, got {t}")
    s_arr = np.asarray(s, dtype=float)
    flat = np.atleast_1d(s_arr).astype(float)

    j0, w = _bracket(model, t)
    j0 = min(j0, model.n_steps - 1)
    beta = model._interp_nodes(model.hedge_ratios(j0), j0, flat)
    if w > 0 and j0 + 1 < model.n_steps:
        upper = model._interp_nodes(model.hedge_ratios(j0 + 1), j0 + 1, flat)
        beta = (1.0 - w) * beta + w * upper
    beta = np.clip(beta, -1.0, 0.0)
    return float(beta[0]) if s_arr.ndim == 0 else beta


def boundary_of(model: BinomialModel) -> ExerciseBoundary:
    return model.boundary
