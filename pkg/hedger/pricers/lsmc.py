"""
Least-Squares Monte Carlo
Longstaff-Schwartz American put price, kept as an independent cross-check oracle
"""
import logging
import math

import numpy as np
from numpy.polynomial import polynomial as P

from hedger.errors import ParameterError
from hedger.market_models import PathSet

logger = logging.getLogger(__name__)


def lsmc_put_price(paths: PathSet, k: float, r: float, degree: int = 3) -> float:
    """Regress discounted cashflows on a polynomial in S/K over in-the-money paths.

    ``paths`` must be simulated under the pricing (risk-neutral) drift.
    """
    if degree < 1:
        raise ParameterError(f"degree must be >= 1, got {degree}")
    prices = paths.prices
    n_steps = paths.grid.n_steps
    discount = math.exp(-r * paths.grid.dt)

    cashflow = np.maximum(k - prices[:, -1], 0.0)
    for n in range(n_steps - 1, 0, -1):
        cashflow = cashflow * discount
        spot = prices[:, n]
        intrinsic = np.maximum(k - spot, 0.0)
        itm = intrinsic > 0
        if np.count_nonzero(itm) <= degree + 1:
            continue
        x = spot[itm] / k
        coefs = P.polyfit(x, cashflow[itm], degree)
        continuation = P.polyval(x, coefs)
        exercise = intrinsic[itm] > continuation
        idx = np.flatnonzero(itm)[exercise]
        cashflow[idx] = intrinsic[idx]

    value = max(float(np.mean(cashflow * discount)), max(k - prices[0, 0], 0.0))
    logger.debug(f"[LSMC] {paths.n_paths} paths, degree {degree}: {value:.4f}")
    return value
