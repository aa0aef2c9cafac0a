import math

import numpy as np
import pytest

from hedger.errors import ParameterError
from hedger.market_models import (
    GbmParams,
    PathSet,
    SvParams,
    TimeGrid,
    correlated_increments,
    floor_paths,
    simulate,
    simulate_gbm,
    simulate_path,
    simulate_sv,
    sv_paths_from_normals,
)


def test_time_grid():
    grid = TimeGrid(1.0, 4)
    assert grid.dt == 0.25
    assert grid.times[-1] == 1.0
    np.testing.assert_allclose(grid.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ParameterError):
        TimeGrid(0.0, 4)
    with pytest.raises(ParameterError):
        TimeGrid(1.0, 0)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        GbmParams(0.0, 0.05, 0.2)
    with pytest.raises(ParameterError):
        SvParams(100.0, 0.05, 0.2, 0.1, 1.5)
    with pytest.raises(ParameterError):
        SvParams(100.0, 0.05, 0.2, -0.1, 0.0)


def test_gbm_paths_start_at_spot_and_are_reproducible():
    params = GbmParams(100.0, 0.05, 0.2)
    grid = TimeGrid(1.0, 10)
    a = simulate_gbm(params, grid, 50, seed=7)
    b = simulate_gbm(params, grid, 50, seed=7)
    assert a.prices.shape == (50, 11)
    np.testing.assert_array_equal(a.prices[:, 0], 100.0)
    np.testing.assert_array_equal(a.prices, b.prices)
    assert not np.array_equal(a.prices, simulate_gbm(params, grid, 50, seed=8).prices)


def test_adding_paths_keeps_earlier_paths():
    params = SvParams(100.0, 0.05, 0.2, 0.3, -0.5)
    grid = TimeGrid(0.5, 12)
    small = simulate_sv(params, grid, 5, seed=3)
    large = simulate_sv(params, grid, 20, seed=3)
    np.testing.assert_array_equal(small.prices, large.prices[:5])
    np.testing.assert_array_equal(small.vols, large.vols[:5])


@pytest.mark.parametrize(
    "params", [GbmParams(100.0, 0.05, 0.2), SvParams(100.0, 0.05, 0.2, 0.4, -0.4)]
)
def test_simulate_path_matches_batch_row(params):
    grid = TimeGrid(1.0, 25)
    batch = simulate(params, grid, 10, seed=11)
    single = simulate_path(params, grid, 11, 6)
    np.testing.assert_allclose(single.prices[0], batch.prices[6])
    if batch.vols is not None:
        np.testing.assert_allclose(single.vols[0], batch.vols[6])


def test_gbm_terminal_mean():
    params = GbmParams(100.0, 0.05, 0.2)
    paths = simulate_gbm(params, TimeGrid(1.0, 5), 10_000, seed=0)
    expected = 100.0 * math.exp(0.05)
    assert paths.prices[:, -1].mean() == pytest.approx(expected, abs=1.0)


def test_sv_with_zero_vol_of_vol_keeps_vol_constant():
    params = SvParams(100.0, 0.05, 0.2, 0.0, -0.4)
    paths = simulate_sv(params, TimeGrid(1.0, 20), 100, seed=1)
    np.testing.assert_array_equal(paths.vols, 0.2)


def test_extreme_vol_of_vol_is_floored():
    params = SvParams(100.0, 0.05, 0.2, 5.0, -0.4)
    raw = simulate_sv(params, TimeGrid(1.0, 50), 500, seed=2, floor=None)
    floored = simulate_sv(params, TimeGrid(1.0, 50), 500, seed=2)
    assert np.any(raw.vols <= 0) or np.any(raw.prices <= 0)
    assert floored.clamped > 0
    assert np.all(floored.prices > 0) and np.all(floored.vols > 0)
    assert np.all(np.isfinite(floored.prices))


def test_paths_are_read_only():
    paths = simulate_gbm(GbmParams(100.0, 0.0, 0.2), TimeGrid(1.0, 3), 2, seed=0)
    with pytest.raises(ValueError):
        paths.prices[0, 0] = 1.0


def test_pathset_shape_checked():
    with pytest.raises(ParameterError):
        PathSet(TimeGrid(1.0, 3), np.ones((2, 3)))


def test_floor_paths_counts():
    paths = PathSet(TimeGrid(1.0, 2), np.array([[1.0, -1.0, 0.0]]))
    floored = floor_paths(paths, 1e-8)
    assert floored.clamped == 2
    assert floored.prices.min() == 1e-8


def test_gbm_without_vol_is_deterministic():
    params = GbmParams(100.0, 0.05, 0.0)
    grid = TimeGrid(1.0, 8)
    paths = simulate_gbm(params, grid, 20, seed=4)
    np.testing.assert_allclose(paths.prices, np.tile(100.0 * np.exp(0.05 * grid.times), (20, 1)), rtol=1e-12)


def test_gbm_log_increment_moments():
    params = GbmParams(100.0, 0.05, 0.2)
    grid = TimeGrid(1.0, 4)
    paths = simulate_gbm(params, grid, 25_000, seed=9)
    increments = np.diff(np.log(paths.prices), axis=1).ravel()
    assert increments.mean() == pytest.approx((0.05 - 0.5 * 0.04) * 0.25, abs=2e-3)
    assert increments.var() == pytest.approx(0.04 * 0.25, rel=0.03)


def test_sv_without_vol_of_vol_is_euler_gbm():
    params = SvParams(100.0, 0.05, 0.25, 0.0, 0.3)
    grid = TimeGrid(0.5, 10)
    rng = np.random.default_rng(1)
    z1, z2 = rng.standard_normal((2, 3, grid.n_steps))
    prices, vols = sv_paths_from_normals(params, grid, z1, z2)
    factors = 1.0 + 0.05 * grid.dt + 0.25 * math.sqrt(grid.dt) * z1
    expected = 100.0 * np.concatenate([np.ones((3, 1)), np.cumprod(factors, axis=1)], axis=1)
    np.testing.assert_allclose(prices, expected, rtol=1e-12)
    np.testing.assert_array_equal(vols, 0.25)


def test_fully_correlated_increments_coincide():
    rng = np.random.default_rng(2)
    z1, z2 = rng.standard_normal((2, 4, 6))
    d_w, d_b = correlated_increments(z1, z2, 1.0, 0.01)
    np.testing.assert_array_equal(d_w, d_b)


@pytest.mark.parametrize("rho", [-0.7, 0.0, 0.4])
def test_increment_correlation(rho):
    z1, z2 = np.random.default_rng(3).standard_normal((2, 1_000_000))
    d_w, d_b = correlated_increments(z1, z2, rho, 1 / 252)
    assert np.corrcoef(d_w, d_b)[0, 1] == pytest.approx(rho, abs=0.01)
    assert d_b.var() == pytest.approx(1 / 252, rel=0.01)


def test_floored_vol_drives_the_next_price_step():
    # dt = 1 and rho = 1: the first vol step goes to -0.2 before flooring
    params = SvParams(100.0, 0.05, 0.2, 1.0, 1.0)
    grid = TimeGrid(2.0, 2)
    z = np.array([[-2.0, 1.0]])
    prices, vols = sv_paths_from_normals(params, grid, z, np.zeros_like(z), floor=1e-8)
    assert vols[0, 1] == 1e-8
    assert prices[0, 1] == pytest.approx(105.0, abs=1e-5)
    assert prices[0, 2] == pytest.approx(105.0 * 1.05, abs=1e-5)

    raw_prices, raw_vols = sv_paths_from_normals(params, grid, z, np.zeros_like(z))
    assert raw_vols[0, 1] == pytest.approx(-0.2)
    assert raw_prices[0, 1] == pytest.approx(145.0)
