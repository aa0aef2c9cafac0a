import math

import numpy as np
import pytest

from hedger.clamping import ClampStats
from hedger.errors import DomainError, ParameterError
from hedger.market_models import SvParams, TimeGrid
from hedger.pricers.binomial import build_american_put
from hedger.pricers.chebyshev import (
    ChebDomain,
    ChebSurface,
    build_surface,
    cheb_eval,
    cheb_eval_2d,
    cheb_nodes,
    make_domain,
    price_query,
)

GBM_LIKE = SvParams(100.0, 0.05, 0.2, 0.0, 0.0)


def test_nodes_are_ascending_with_exact_endpoints():
    nodes = cheb_nodes(2.0, 5.0, 8)
    assert len(nodes) == 9
    assert nodes[0] == 2.0 and nodes[-1] == 5.0
    assert np.all(np.diff(nodes) > 0)
    with pytest.raises(ParameterError):
        cheb_nodes(1.0, 1.0, 4)
    with pytest.raises(ParameterError):
        cheb_nodes(0.0, 1.0, 0)


def test_interpolation_is_exact_for_low_degree_polynomials():
    nodes = cheb_nodes(-1.0, 3.0, 6)
    poly = lambda x: 2.0 - x + 0.5 * x**3 - 0.1 * x**6
    x = np.linspace(-1.0, 3.0, 37)
    np.testing.assert_allclose(cheb_eval(poly(nodes), nodes, x), poly(x), atol=1e-10)
    assert cheb_eval(poly(nodes), nodes, nodes[3]) == pytest.approx(poly(nodes[3]))


def test_square_is_reproduced_on_four_intervals():
    nodes = cheb_nodes(0.0, 2.0, 4)
    assert cheb_eval(nodes**2, nodes, 1.3) == pytest.approx(1.69, abs=1e-12)
    np.testing.assert_allclose(nodes + nodes[::-1], 2.0, atol=1e-12)


def test_exponential_error_on_sixteen_intervals():
    nodes = cheb_nodes(-1.0, 1.0, 16)
    x = np.linspace(-1.0, 1.0, 201)
    error = np.max(np.abs(cheb_eval(np.exp(nodes), nodes, x) - np.exp(x)))
    assert error < 1e-12


def test_smooth_function_converges():
    nodes = cheb_nodes(0.0, 2.0, 30)
    x = np.linspace(0.0, 2.0, 101)
    np.testing.assert_allclose(cheb_eval(np.exp(-nodes) * np.sin(3 * nodes), nodes, x),
                               np.exp(-x) * np.sin(3 * x), atol=1e-10)


def test_tensor_interpolation():
    xn = cheb_nodes(0.0, 1.0, 4)
    yn = cheb_nodes(1.0, 2.0, 3)
    f = lambda x, y: x**2 * y + 3.0 * y**3 - x
    values = f(xn[:, None], yn[None, :])
    x = np.array([0.1, 0.5, 0.93])
    y = np.array([1.2, 1.5, 1.99])
    np.testing.assert_allclose(cheb_eval_2d(values, xn, yn, x, y), f(x, y), atol=1e-10)


def test_out_of_range_queries_clamp_and_count():
    nodes = cheb_nodes(0.0, 1.0, 5)
    stats = ClampStats()
    value = cheb_eval(nodes**2, nodes, np.array([-0.5, 0.5, 2.0]), stats)
    np.testing.assert_allclose(value, [0.0, 0.25, 1.0], atol=1e-12)
    assert stats.clamped == 2 and stats.total == 3


def test_domain_validation():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(ParameterError):
        ChebDomain(100.0, 50.0, 0.1, 0.3, 20, 4, grid)
    with pytest.raises(ParameterError):
        ChebDomain(50.0, 150.0, 0.1, 0.3, 2, 4, grid)


def test_domain_brackets_spot_and_vol():
    params = SvParams(100.0, 0.05, 0.2, 0.3, -0.4)
    domain = make_domain(params, TimeGrid(1 / 12, 21), pilot_paths=500, nodes=(20, 6))
    assert domain.s_lo < 100.0 < domain.s_hi
    assert domain.v_lo < 0.2 < domain.v_hi
    assert len(domain.vol_nodes) == 7


def test_degenerate_vol_dimension_gets_a_band():
    domain = make_domain(GBM_LIKE, TimeGrid(1.0, 10), pilot_paths=200, nodes=(20, 2))
    assert domain.v_lo == pytest.approx(0.16)
    assert domain.v_hi == pytest.approx(0.24)
    assert np.any(np.isclose(domain.vol_nodes, 0.2))


@pytest.fixture(scope="module")
def small_surface():
    grid = TimeGrid(1.0, 20)
    domain = make_domain(GBM_LIKE, grid, pilot_paths=500, nodes=(24, 2), seed=1)
    return build_surface(GBM_LIKE, 100.0, 0.05, grid, domain, mc_per_node=500, seed=1)


def test_small_surface_is_close_to_the_tree(small_surface):
    tree = build_american_put(100.0, 100.0, 0.05, 0.2, TimeGrid(1.0, 1000), 1000)
    assert price_query(small_surface, 100.0, 0.2, 0.0) == pytest.approx(tree.price(100.0, 0.0), abs=0.25)


def test_surface_queries(small_surface):
    assert small_surface.price(80.0, 1.0) == 20.0
    assert small_surface.price(50.0, 0.5, 0.2) >= 50.0
    values = small_surface.price(np.array([90.0, 100.0, 110.0]), 0.25, np.full(3, 0.2))
    assert values.shape == (3,)
    assert np.all(np.diff(values) < 0)
    with pytest.raises(DomainError):
        small_surface.price(100.0, 1.2)


def test_surface_boundary(small_surface):
    boundary = small_surface.boundary
    assert boundary.critical_price(1.0) == 100.0
    b = boundary.critical_price(0.5, 0.2)
    assert 60.0 < b < 100.0
    frame = boundary.to_frame()
    assert list(frame.columns) == ["step", "t", "critical_price"]


def test_serialised_surface_prices_identically(small_surface):
    restored = ChebSurface.from_arrays(small_surface.to_arrays())
    assert restored.price(95.0, 0.3, 0.2) == pytest.approx(small_surface.price(95.0, 0.3, 0.2))


def test_build_rejects_mismatched_grid():
    domain = make_domain(GBM_LIKE, TimeGrid(1.0, 10), pilot_paths=200, nodes=(10, 2))
    with pytest.raises(ParameterError):
        build_surface(GBM_LIKE, 100.0, 0.05, TimeGrid(1.0, 12), domain)


def test_sv_surface_builds_and_is_finite():
    params = SvParams(100.0, 0.05, 0.2, 0.1, -0.4)
    grid = TimeGrid(1 / 12, 6)
    domain = make_domain(params, grid, pilot_paths=300, nodes=(16, 4), seed=2)
    surface = build_surface(params, 100.0, 0.05, grid, domain, mc_per_node=200, seed=2, boundary_method="root")
    assert np.all(np.isfinite(surface.values))
    price = surface.price(100.0, 0.0, 0.2)
    assert 1.5 < price < 4.0
    assert surface.price(100.0, 0.0, 0.25) > surface.price(100.0, 0.0, 0.15)


@pytest.mark.slow
def test_full_surface_matches_tree():
    grid = TimeGrid(1.0, 100)
    domain = make_domain(GBM_LIKE, grid, pilot_paths=1000, nodes=(50, 2), seed=0)
    surface = build_surface(GBM_LIKE, 100.0, 0.05, grid, domain, mc_per_node=1000, seed=0)
    tree = build_american_put(100.0, 100.0, 0.05, 0.2, TimeGrid(1.0, 5000), 5000)
    assert price_query(surface, 100.0, 0.2, 0.0) == pytest.approx(tree.price(100.0, 0.0), abs=0.05)
    assert math.isfinite(surface.boundary.critical_price(0.5, 0.2))
