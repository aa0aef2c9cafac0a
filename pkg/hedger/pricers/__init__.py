"""
Pricers Module
American put pricers (binomial tree, dynamic Chebyshev) and the LSMC oracle
"""

from .base import BoundaryLike, OptionPricer
from .binomial import (
    BinomialModel,
    ExerciseBoundary,
    boundary_of,
    build_american_put,
    hedge_at,
    price_at,
)
from .chebyshev import (
    ChebBoundary,
    ChebDomain,
    ChebSurface,
    build_surface,
    cheb_eval,
    cheb_eval_2d,
    cheb_nodes,
    make_domain,
    price_query,
)
from .lsmc import lsmc_put_price

__all__ = [
    'BoundaryLike',
    'OptionPricer',
    'BinomialModel',
    'ExerciseBoundary',
    'boundary_of',
    'build_american_put',
    'hedge_at',
    'price_at',
    'ChebBoundary',
    'ChebDomain',
    'ChebSurface',
    'build_surface',
    'cheb_eval',
    'cheb_eval_2d',
    'cheb_nodes',
    'make_domain',
    'price_query',
    'lsmc_put_price',
]
