"""
Evaluator
Out-of-sample hedging runs with counterparty early exercise and money-market P&L

Accounting per path (positions A in [-1, 0], cost rate lam):
    B_0 = C_0 - S_0 A_0
    B_n = B_{n-1} e^{r dt} - (A_n - A_{n-1}) S_n - lam |A_n - A_{n-1}| S_n
    final = B e^{r dt} + S A_prev - (K - S)^+   at the first step with S <= b(t), or at maturity
No cost is charged at inception or on the final unwind.
"""
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Optional, Protocol, Union

import numpy as np
import pandas as pd

from hedger.agent.ddpg import AgentParams
from hedger.black_scholes import BsInputs, put_delta
from hedger.errors import ConfigurationError, DataError, ParameterError
from hedger.market_models import PathSet, SvParams, TimeGrid
from hedger.pricers.base import ArrayLike, BoundaryLike, OptionPricer
from hedger.pricers.binomial import BinomialModel, hedge_at

logger = logging.getLogger(__name__)

NO_EXERCISE = -1


# ============================================================================
# Strategies
# ============================================================================

class Strategy(Protocol):
    label: str

    def positions(
        self, s: np.ndarray, t: float, tau: float, v: Optional[np.ndarray], prev: np.ndarray
    ) -> np.ndarray:
        """Target positions in [-1, 0] for a batch of paths at time ``t``."""
        ...


@dataclass
class AgentStrategy:
    agent: AgentParams
    strike: float
    label: str = "DRL"

    def positions(self, s, t, tau, v, prev):
        states = np.column_stack([s / self.strike, np.full_like(s, tau), prev])
        return np.clip(self.agent.policy(states), -1.0, 0.0)


@dataclass
class BsDeltaStrategy:
    """Put Delta at a fixed sigma, or at each path's current vol when one is supplied."""

    strike: float
    r: float
    sigma: Optional[float] = None
    label: str = "BS Delta"

    def positions(self, s, t, tau, v, prev):
        vol = v if v is not None else self.sigma
        if vol is None:
            raise ConfigurationError("BS Delta needs a fixed sigma or per-path vols")
        return np.asarray(put_delta(BsInputs(s, self.strike, self.r, vol, tau)), dtype=float)


@dataclass
class BinomialStrategy:
    model: BinomialModel
    label: str = "Binomial"

    def positions(self, s, t, tau, v, prev):
        return np.asarray(hedge_at(self.model, s, t), dtype=float)


# ============================================================================
# Reports
# ============================================================================

@dataclass(frozen=True)
class HedgeReport:
    label: str
    lam: float
    pnl: np.ndarray
    exercise_step: np.ndarray
    seed: Optional[int] = None
    positions: Optional[np.ndarray] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.pnl)

    @property
    def mean(self) -> float:
        return float(np.mean(self.pnl))

    @property
    def std(self) -> float:
        return float(np.std(self.pnl, ddof=1)) if self.n > 1 else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"path": np.arange(self.n), "pnl": self.pnl, "exercise_step": self.exercise_step})

    def summary(self) -> dict:
        return {
            "strategy": self.label,
            "lambda": self.lam,
            "n": self.n,
            "mean": self.mean,
            "std": self.std,
            "exercised": int(np.count_nonzero(self.exercise_step != NO_EXERCISE)),
            "seed": self.seed,
        }


# ============================================================================
# Accounting
# ============================================================================

def exercise_check(s: ArrayLike, t: float, boundary: BoundaryLike, v: Optional[ArrayLike] = None) -> ArrayLike:
    """True where s <= b(t) (ties exercise)."""
    b = boundary.critical_price(t, v)
    out = np.asarray(s) <= b
    return bool(out) if out.ndim == 0 else out


def _initial_value(c0: Union[float, np.ndarray, OptionPricer], s0: np.ndarray, v0: Optional[np.ndarray]) -> np.ndarray:
    if hasattr(c0, "price"):
        return np.broadcast_to(np.asarray(c0.price(s0, 0.0, v0), dtype=float), s0.shape).copy()
    return np.broadcast_to(np.asarray(c0, dtype=float), s0.shape).copy()


def run_batch(
    strategy: Strategy,
    paths: PathSet,
    c0: Union[float, np.ndarray, OptionPricer],
    boundary: Optional[BoundaryLike],
    r: float,
    lam: float,
    strike: float,
    record_positions: bool = False,
) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Vectorised accounting over all paths; returns (pnl, exercise_step, positions)."""
    if boundary is None:
        raise ConfigurationError("an exercise boundary is required for evaluation")
    if lam < 0:
        raise ParameterError(f"lambda must be non-negative, got {lam}")
    grid = paths.grid
    n_steps, dt = grid.n_steps, grid.dt
    prices = paths.prices
    vols = paths.vols
    growth = math.exp(r * dt)

    def vol_at(n):
        return None if vols is None else vols[:, n]

    s0 = prices[:, 0]
    a_prev = np.clip(strategy.positions(s0, 0.0, grid.maturity, vol_at(0), np.zeros_like(s0)), -1.0, 0.0)
    bank = _initial_value(c0, s0, vol_at(0)) - s0 * a_prev
    alive = np.ones(paths.n_paths, dtype=bool)
    pnl = np.zeros(paths.n_paths)
    exercise_step = np.full(paths.n_paths, NO_EXERCISE)
    held = np.zeros((paths.n_paths, n_steps)) if record_positions else None
    if held is not None:
        held[:, 0] = a_prev

    for n in range(1, n_steps + 1):
        t = grid.time_at(n)
        s = prices[:, n]
        bank = np.where(alive, bank * growth, bank)
        intrinsic = np.maximum(strike - s, 0.0)
        if n == n_steps:
            stopping = alive.copy()
        else:
            stopping = alive & (intrinsic > 0) & exercise_check(s, t, boundary, vol_at(n))
        pnl[stopping] = bank[stopping] + s[stopping] * a_prev[stopping] - intrinsic[stopping]
        exercise_step[stopping & (intrinsic > 0)] = n
        alive &= ~stopping
        if n == n_steps or not alive.any():
            break

        target = np.clip(strategy.positions(s, t, grid.maturity - t, vol_at(n), a_prev), -1.0, 0.0)
        trade = np.where(alive, target - a_prev, 0.0)
        bank = bank - trade * s - lam * np.abs(trade) * s
        a_prev = a_prev + trade
        if held is not None:
            held[:, n] = np.where(alive, a_prev, np.nan)

    return pnl, exercise_step, held


def run_path(
    strategy: Strategy,
    path: PathSet,
    c0: Union[float, OptionPricer],
    boundary: Optional[BoundaryLike],
    r: float,
    lam: float,
    strike: float,
) -> tuple[float, Optional[int]]:
    """Final P&L and exercise step (None when held to an out-of-the-money expiry)."""
    if path.n_paths != 1:
        raise ParameterError(f"run_path takes a single path, got {path.n_paths}")
    pnl, step, _ = run_batch(strategy, path, c0, boundary, r, lam, strike)
    return float(pnl[0]), (None if step[0] == NO_EXERCISE else int(step[0]))


def evaluate(
    strategy: Strategy,
    paths: PathSet,
    c0: Union[float, OptionPricer],
    boundary: Optional[BoundaryLike],
    r: float,
    lam: float,
    strike: float,
    record_positions: bool = False,
) -> HedgeReport:
    if paths.n_paths < 1:
        raise ParameterError("at least one path is required")
    pnl, step, held = run_batch(strategy, paths, c0, boundary, r, lam, strike, record_positions)
    report = HedgeReport(strategy.label, float(lam), pnl, step, paths.seed, held)
    logger.info(
        f"[Evaluate] {strategy.label} lambda={lam:g}: mean {report.mean:.4f}, "
        f"std {report.std:.4f} over {report.n} paths"
    )
    return report


# ============================================================================
# Empirical paths
# ============================================================================

def filter_vols(closes: np.ndarray, params: SvParams, dt: float, floor: float = 1e-8) -> np.ndarray:
    """Deterministic vol path implied by observed closes under the SV dynamics.

    Each return fixes dW through sigma_{n-1}(1 + nu rho dW) dW = R with
    R = S_n / S_{n-1} - 1 - mu dt; dB keeps only its part correlated with dW.
    """
    closes = np.asarray(closes, dtype=float)
    vols = np.empty_like(closes)
    vols[0] = params.sigma0
    a_coef = params.nu * params.rho
    for n in range(1, len(closes)):
        sigma = vols[n - 1]
        ret = closes[n] / closes[n - 1] - 1.0 - params.mu * dt
        if a_coef == 0.0:
            d_w = ret / sigma
        else:
            disc = 1.0 + 4.0 * a_coef * ret / sigma
            # root nearest ret / sigma; vertex when no real root exists
            d_w = 2.0 * ret / (sigma * (1.0 + math.sqrt(disc))) if disc >= 0 else -1.0 / (2.0 * a_coef)
        vols[n] = max(sigma * (1.0 + a_coef * d_w), floor)
    return vols


@dataclass(frozen=True)
class EmpiricalRun:
    pnl: float
    exercise_step: Optional[int]
    vols: np.ndarray
    c0: float


def evaluate_empirical(
    strategy: Strategy,
    dates: list,
    closes: np.ndarray,
    maturity: date,
    strike: float,
    iv: float,
    params: SvParams,
    r: float,
    lam: float,
    pricer: OptionPricer,
    boundary: BoundaryLike,
    maturity_years: Optional[float] = None,
) -> EmpiricalRun:
    """One run along observed daily closes from the sale date to maturity."""
    if len(closes) < 2:
        raise DataError("need at least two closes between sale and maturity")
    if dates[-1] != maturity:
        raise DataError(f"price series ends {dates[-1]}, option matures {maturity}")
    years = maturity_years if maturity_years is not None else (maturity - dates[0]).days / 365.0
    grid = TimeGrid(years, len(closes) - 1)
    filter_params = SvParams(float(closes[0]), params.mu, iv, params.nu, params.rho)
    vols = filter_vols(closes, filter_params, grid.dt)
    path = PathSet(grid, np.asarray(closes, dtype=float)[None, :], vols[None, :])
    c0 = float(pricer.price(float(closes[0]), 0.0, iv))
    pnl, step = run_path(strategy, path, c0, boundary, r, lam, strike)
    return EmpiricalRun(pnl, step, vols, c0)
