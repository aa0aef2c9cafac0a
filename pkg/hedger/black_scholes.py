"""
Black-Scholes
Closed-form European put price and Delta (benchmark hedge and pricing oracle)

Normal CDF is scipy.special.ndtr (erf based, absolute error well below 1e-12).
At tau <= 0 Delta follows the limit rule: -1 below strike, 0 above, -0.5 at the strike.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr

from hedger.errors import ParameterError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class BsInputs:
    """Spot, strike, rate, volatility and time to maturity (scalars or arrays)."""

    s: ArrayLike
    k: float
    r: float
    sigma: ArrayLike
    tau: ArrayLike

    def __post_init__(self):
        if np.any(np.asarray(self.s) <= 0):
            raise ParameterError("spot must be positive")
        if not self.k > 0:
            raise ParameterError(f"strike must be positive, got {self.k}")
        tau, sigma = np.broadcast_arrays(
            np.asarray(self.tau, dtype=float), np.asarray(self.sigma, dtype=float)
        )
        if np.any((tau > 0) & (sigma <= 0)):
            raise ParameterError("sigma must be positive when tau > 0")


def _d1_d2(s, k, r, sigma, tau):
    sqrt_tau = np.sqrt(tau)
    d1 = (np.log(s / k) + (r + 0.5 * sigma**2) * tau) / (sigma * sqrt_tau)
    return d1, d1 - sigma * sqrt_tau


def _unwrap(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def put_delta(inputs: BsInputs) -> ArrayLike:
    """N(d1) - 1, bounded in [-1, 0]."""
    s, sigma, tau = np.broadcast_arrays(
        np.asarray(inputs.s, dtype=float),
        np.asarray(inputs.sigma, dtype=float),
        np.asarray(inputs.tau, dtype=float),
    )
    live = tau > 0
    safe_tau = np.where(live, tau, 1.0)
    safe_sigma = np.where(live, sigma, 1.0)
    d1, _ = _d1_d2(s, inputs.k, inputs.r, safe_sigma, safe_tau)

    expired = np.where(s < inputs.k, -1.0, np.where(s > inputs.k, 0.0, -0.5))
    return _unwrap(np.where(live, ndtr(d1) - 1.0, expired))


def put_price(inputs: BsInputs) -> ArrayLike:
    """k e^{-r tau} N(-d2) - s N(-d1); intrinsic value at tau = 0."""
    s, sigma, tau = np.broadcast_arrays(
        np.asarray(inputs.s, dtype=float),
        np.asarray(inputs.sigma, dtype=float),
        np.asarray(inputs.tau, dtype=float),
    )
    if np.any(tau < 0):
        raise ParameterError("tau must be non-negative")
    live = tau > 0
    safe_tau = np.where(live, tau, 1.0)
    safe_sigma = np.where(live, sigma, 1.0)
    d1, d2 = _d1_d2(s, inputs.k, inputs.r, safe_sigma, safe_tau)

    value = inputs.k * np.exp(-inputs.r * safe_tau) * ndtr(-d2) - s * ndtr(-d1)
    intrinsic = np.maximum(inputs.k - s, 0.0)
    return _unwrap(np.where(live, np.maximum(value, 0.0), intrinsic))
