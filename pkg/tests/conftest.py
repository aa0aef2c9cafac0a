from pathlib import Path

import numpy as np
import pytest

from hedger.black_scholes import BsInputs, put_price
from hedger.market_models import PathSet, TimeGrid

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "data" / "fixtures"
REFERENCE = ROOT / "data" / "reference"
CONFIGS = ROOT / "configs"


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    """Cache and run registry live under tmp_path for every test."""
    monkeypatch.setenv("HEDGER_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("HEDGER_DB_PATH", str(tmp_path / "runs.db"))
    monkeypatch.setenv("HEDGER_DATA_DIR", str(ROOT / "data"))


class EuropeanPricer:
    """Black-Scholes put at a fixed vol; stands in for a built American pricer."""

    def __init__(self, strike: float, r: float, sigma: float, maturity: float):
        self.strike = strike
        self.r = r
        self.sigma = sigma
        self.maturity = maturity

    def price(self, s, t, v=None):
        tau = max(self.maturity - t, 0.0)
        return put_price(BsInputs(s, self.strike, self.r, self.sigma if v is None else v, tau))


class FlatBoundary:
    def __init__(self, level: float):
        self.level = level

    def critical_price(self, t, v=None):
        if v is None or np.ndim(v) == 0:
            return self.level
        return np.full(np.shape(v), self.level)


class ConstantStrategy:
    def __init__(self, first: float, later: float = None, label: str = "Constant"):
        self.first = first
        self.later = first if later is None else later
        self.label = label

    def positions(self, s, t, tau, v, prev):
        return np.full_like(np.asarray(s, dtype=float), self.first if t == 0 else self.later)


@pytest.fixture
def european_pricer():
    return EuropeanPricer(100.0, 0.05, 0.2, 1.0)


@pytest.fixture
def short_path():
    """One path S = 100, 90, 95 over a two-step unit grid."""
    return PathSet(TimeGrid(1.0, 2), np.array([[100.0, 90.0, 95.0]]))


@pytest.fixture
def chain_file():
    return FIXTURES / "option_chain.csv"


@pytest.fixture
def prices_file():
    return FIXTURES / "asset_paths.csv"


@pytest.fixture
def reference_file():
    return REFERENCE / "published_pnl.csv"
