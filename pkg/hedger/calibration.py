"""
Calibration
Per-option (rho, nu) fit of the SV model to quoted mid prices, averaged per symbol

The model price is the discounted mean European put payoff over Euler paths
started at the quote's implied vol. Normals are drawn once per search so the
objective is a smooth, noise-free function of (rho, nu).
"""
import logging
import math
from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import BFGS, Bounds, minimize

from hedger.errors import ParameterError
from hedger.market_models import DEFAULT_FLOOR, SvParams, TimeGrid, draw_normals, sv_paths_from_normals

logger = logging.getLogger(__name__)

TRADING_DAYS_PER_YEAR = 252
CALENDAR_DAYS_PER_YEAR = 365.0
INITIAL_GUESS = (-0.4, 0.1)


@dataclass(frozen=True)
class OptionQuote:
    symbol: str
    quote_date: date
    maturity: date
    strike: float
    mid: float
    iv: float
    close: float

    def __post_init__(self):
        if not self.mid > 0:
            raise ParameterError(f"mid must be positive, got {self.mid}")
        if not self.iv > 0:
            raise ParameterError(f"iv must be positive, got {self.iv}")
        if not self.close > 0:
            raise ParameterError(f"close must be positive, got {self.close}")
        if self.strike < 0:
            raise ParameterError(f"strike must be non-negative, got {self.strike}")
        if not self.maturity > self.quote_date:
            raise ParameterError(f"maturity {self.maturity} must follow quote date {self.quote_date}")

    @property
    def maturity_years(self) -> float:
        return (self.maturity - self.quote_date).days / CALENDAR_DAYS_PER_YEAR

    @property
    def n_steps(self) -> int:
        return max(1, round(self.maturity_years * TRADING_DAYS_PER_YEAR))

    @property
    def key(self) -> str:
        return f"{self.symbol}_{self.maturity.isoformat()}_{self.strike:g}"


@dataclass(frozen=True)
class CalibrationBounds:
    rho: tuple = (-0.95, 0.95)
    nu: tuple = (0.001, 2.0)

    def __post_init__(self):
        if not -0.999 < self.rho[0] < self.rho[1] < 0.999:
            raise ParameterError(f"rho bounds must lie inside (-0.999, 0.999), got {self.rho}")
        if not 0 <= self.nu[0] < self.nu[1]:
            raise ParameterError(f"nu bounds must satisfy 0 <= lo < hi, got {self.nu}")

    def contains(self, rho: float, nu: float) -> bool:
        return self.rho[0] <= rho <= self.rho[1] and self.nu[0] <= nu <= self.nu[1]


@dataclass(frozen=True)
class OptionCalibration:
    quote: OptionQuote
    rho: float
    nu: float
    objective: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SymbolParams:
    symbol: str
    rho: float
    nu: float
    n_options: int


class _CommonNormals:
    """Normals for one quote, fixed across every objective evaluation."""

    def __init__(self, quote: OptionQuote, n_paths: int, seed: int):
        self.grid = TimeGrid(quote.maturity_years, quote.n_steps)
        z = draw_normals(seed, n_paths, self.grid.n_steps, 2)
        self.z1 = z[:, 0, :]
        self.z2 = z[:, 1, :]


def model_price(
    params: SvParams,
    quote: OptionQuote,
    r: float,
    n_paths: int = 10_000,
    seed: int = 0,
    normals: Optional[_CommonNormals] = None,
) -> float:
    """e^{-rT} mean (K - S_T)^+ under the SV model (no early exercise)."""
    if quote.strike == 0:
        return 0.0
    normals = normals or _CommonNormals(quote, n_paths, seed)
    prices, _ = sv_paths_from_normals(params, normals.grid, normals.z1, normals.z2, floor=DEFAULT_FLOOR)
    payoff = np.maximum(quote.strike - prices[:, -1], 0.0)
    return math.exp(-r * normals.grid.maturity) * float(payoff.mean())


def calibrate_option(
    quote: OptionQuote,
    r: float,
    bounds: CalibrationBounds = CalibrationBounds(),
    seed: int = 0,
    n_paths: int = 10_000,
    x0: tuple = INITIAL_GUESS,
    max_iter: int = 300,
) -> OptionCalibration:
    """Trust-region search (finite-difference gradients, BFGS Hessian) inside the bounds."""
    normals = _CommonNormals(quote, n_paths, seed)

    def price(x) -> float:
        params = SvParams(quote.close, r, quote.iv, float(x[1]), float(x[0]))
        return model_price(params, quote, r, normals=normals)

    best = {"x": np.array(x0, dtype=float), "f": math.inf}

    def objective(x) -> float:
        f = (price(x) - quote.mid) ** 2
        if f < best["f"]:
            best["x"], best["f"] = np.array(x, dtype=float), f
        return f

    if objective(best["x"]) == 0.0:
        return OptionCalibration(quote, float(x0[0]), float(x0[1]), 0.0, 0, True)

    result = minimize(
        objective,
        np.array(x0, dtype=float),
        method="trust-constr",
        jac="2-point",
        hess=BFGS(),
        bounds=Bounds([bounds.rho[0], bounds.nu[0]], [bounds.rho[1], bounds.nu[1]], keep_feasible=True),
        options={"maxiter": max_iter, "xtol": 1e-10, "gtol": 1e-12},
    )
    converged = result.status in (1, 2)
    rho, nu = np.clip(best["x"], [bounds.rho[0], bounds.nu[0]], [bounds.rho[1], bounds.nu[1]])
    if not converged:
        logger.warning(
            f"[Calibrate] ⚠ {quote.key}: no convergence after {result.nit} iterations, "
            f"keeping best objective {best['f']:.3e}"
        )
    else:
        logger.info(f"[Calibrate] ✓ {quote.key}: rho={rho:.4f}, nu={nu:.4f}, objective {best['f']:.3e}")
    return OptionCalibration(quote, float(rho), float(nu), float(best["f"]), int(result.nit), converged)


def symbol_params(results: Sequence[OptionCalibration]) -> tuple[float, float]:
    """Arithmetic means of rho and nu."""
    if not results:
        raise ParameterError("at least one calibration result is required")
    return (
        float(np.mean([res.rho for res in results])),
        float(np.mean([res.nu for res in results])),
    )


def calibrate_chain(
    quotes: Sequence[OptionQuote],
    r: float,
    bounds: CalibrationBounds = CalibrationBounds(),
    seed: int = 0,
    n_paths: int = 10_000,
) -> tuple[list, dict]:
    """Calibrate every quote, then average per symbol."""
    results = [calibrate_option(q, r, bounds, seed, n_paths) for q in quotes]
    by_symbol: dict = {}
    for res in results:
        by_symbol.setdefault(res.quote.symbol, []).append(res)
    averaged = {}
    for symbol, group in by_symbol.items():
        rho, nu = symbol_params(group)
        averaged[symbol] = SymbolParams(symbol, rho, nu, len(group))
    return results, averaged
