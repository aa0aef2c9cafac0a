"""
Pricer Builders
Cache-aware construction of binomial trees and Chebyshev surfaces
"""
import logging
from dataclasses import asdict

from hedger.cache import get_cache_key, get_cached_result, save_to_cache
from hedger.market_models import SvParams, TimeGrid
from hedger.pricers.binomial import FORMAT_VERSION as TREE_FORMAT, BinomialModel, build_american_put
from hedger.pricers.chebyshev import BoundaryMethod, ChebSurface, build_surface, make_domain

logger = logging.getLogger(__name__)


def binomial_pricer(
    s0: float, k: float, r: float, sigma: float, maturity: float, n_tree_steps: int, use_cache: bool = True
) -> BinomialModel:
    meta = {
        "kind": "binomial",
        "format_version": TREE_FORMAT,
        "s0": s0, "k": k, "r": r, "sigma": sigma,
        "maturity": maturity, "n_tree_steps": int(n_tree_steps),
    }
    key = get_cache_key(meta)
    if use_cache:
        arrays = get_cached_result("binomial", key)
        if arrays is not None:
            return BinomialModel.from_arrays(arrays)
    model = build_american_put(s0, k, r, sigma, TimeGrid(maturity, int(n_tree_steps)), n_tree_steps)
    if use_cache:
        save_to_cache("binomial", key, model.to_arrays(), meta)
    return model


def chebyshev_pricer(
    params: SvParams,
    k: float,
    r: float,
    grid: TimeGrid,
    nodes: tuple = (50, 20),
    mc_per_node: int = 1000,
    pilot_paths: int = 1000,
    seed: int = 0,
    boundary_method: BoundaryMethod = "midpoint",
    use_cache: bool = True,
) -> ChebSurface:
    meta = {
        "kind": "chebyshev",
        "params": asdict(params), "k": k, "r": r,
        "maturity": grid.maturity, "n_steps": grid.n_steps,
        "nodes": list(nodes), "mc_per_node": mc_per_node, "pilot_paths": pilot_paths,
        "seed": seed, "boundary_method": boundary_method,
    }
    key = get_cache_key(meta)
    if use_cache:
        arrays = get_cached_result("chebyshev", key)
        if arrays is not None:
            return ChebSurface.from_arrays(arrays)
    domain = make_domain(params, grid, pilot_paths, nodes=tuple(nodes), seed=seed)
    surface = build_surface(params, k, r, grid, domain, mc_per_node, seed, boundary_method)
    if use_cache:
        save_to_cache("chebyshev", key, surface.to_arrays(), meta)
    return surface
