"""
Pricer Protocols
Shared interfaces so the environment and evaluator accept any American pricer
"""
from typing import Optional, Protocol, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class OptionPricer(Protocol):
    strike: float

    def price(self, s: ArrayLike, t: float, v: Optional[ArrayLike] = None) -> ArrayLike:
        """American put value at spot ``s`` (and vol ``v``) at calendar time ``t``."""
        ...


class BoundaryLike(Protocol):
    def critical_price(self, t: float, v: Optional[ArrayLike] = None) -> ArrayLike:
        """Critical spot at time ``t`` at or below which the holder exercises."""
        ...
