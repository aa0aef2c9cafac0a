from datetime import date

import shutil

import numpy as np
import pytest

from hedger.calibration import SymbolParams
from hedger.data_io import (
    PriceSeries,
    load_option_chain,
    load_price_series,
    load_reference_table,
    load_symbol_params,
    write_frame,
    write_option_chain,
    write_symbol_params,
)
from data.seed import seed_data
from hedger.errors import DataError, FormatError, LookupFailure, RowError
from tests.conftest import FIXTURES, REFERENCE

HEADER = "symbol,quote_date,close,maturity,strike,mid,iv\n"


def test_fixture_chain_loads(chain_file):
    quotes = load_option_chain(chain_file)
    assert len(quotes) == 80
    first = quotes[0]
    assert first.symbol == "AAPL"
    assert first.quote_date == date(2023, 8, 17)
    assert first.close == 174.0
    symbols = {"AAPL", "JNJ", "MA", "META", "MSFT", "NKE", "NVDA", "SPY"}
    assert {q.symbol for q in quotes} == symbols
    assert all(sum(q.symbol == s for q in quotes) == 10 for s in symbols)
    assert all(0.75 < q.strike / q.close < 1.25 and q.mid > 0 for q in quotes)


def test_empty_chain(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text("")
    assert load_option_chain(path) == []
    path.write_text(HEADER)
    assert load_option_chain(path) == []


def test_missing_columns(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text("symbol,strike\nAAPL,100\n")
    with pytest.raises(FormatError):
        load_option_chain(path)


def test_unparsable_value_reports_line(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text(
        HEADER
        + "AAPL,2023-08-17,174,2023-09-15,175,4.46,0.22\n"
        + "AAPL,2023-08-17,174,2023-09-15,abc,4.46,0.22\n"
    )
    with pytest.raises(RowError) as excinfo:
        load_option_chain(path)
    assert excinfo.value.line == 3


def test_invalid_rows_are_skipped(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text(
        HEADER
        + "AAPL,2023-08-17,174,2023-09-15,175,4.46,0.22\n"
        + "AAPL,2023-08-17,174,2023-09-15,180,0,0.22\n"
        + "AAPL,2023-08-17,174,2023-08-10,180,1.0,0.22\n"
    )
    assert len(load_option_chain(path)) == 1


def test_chain_write_then_load(tmp_path, chain_file):
    quotes = load_option_chain(chain_file)[:5]
    path = write_option_chain(quotes, tmp_path / "out" / "chain.csv")
    assert load_option_chain(path) == quotes


def test_price_series(prices_file):
    series = load_price_series(prices_file, "NVDA")
    assert len(series) == 66
    assert series.close_on(date(2023, 11, 17)) == pytest.approx(492.98)
    assert series.trading_days(date(2023, 8, 17), date(2023, 9, 15)) == 20
    window = series.between(date(2023, 8, 17), date(2023, 9, 15))
    assert window.dates[0] == date(2023, 8, 17) and window.dates[-1] == date(2023, 9, 15)
    with pytest.raises(DataError):
        series.close_on(date(2023, 8, 19))
    with pytest.raises(DataError):
        series.between(date(2023, 8, 17), date(2023, 9, 16))


def test_unknown_symbol(prices_file):
    with pytest.raises(LookupFailure):
        load_price_series(prices_file, "TSLA")


def test_price_file_formatting(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text('date,AAA\n2023-01-02,"$1,234.50"\n2023-01-03,1240.00\n')
    series = load_price_series(path, "AAA")
    np.testing.assert_allclose(series.closes, [1234.5, 1240.0])
    path.write_text("date,AAA\n2023-01-03,10\n2023-01-02,11\n")
    with pytest.raises(FormatError):
        load_price_series(path, "AAA")
    path.write_text("date,AAA\n2023-01-02,10\n2023-01-02,11\n")
    with pytest.raises(FormatError):
        load_price_series(path, "AAA")


def test_series_rejects_non_positive_closes():
    with pytest.raises(FormatError):
        PriceSeries("X", (date(2023, 1, 2), date(2023, 1, 3)), np.array([1.0, 0.0]))


def test_symbol_params_file(tmp_path):
    params = {"AAPL": SymbolParams("AAPL", -0.41, 0.12, 10)}
    path = write_symbol_params(params, tmp_path / "symbol_params.json")
    assert load_symbol_params(path) == params
    with pytest.raises(DataError):
        load_symbol_params(tmp_path / "missing.json")


def test_reference_table(reference_file):
    table = load_reference_table(reference_file)
    assert len(table) == 80
    assert list(table.columns) == ["symbol", "maturity", "strike", "rl_mean", "delta_mean"]
    assert table["strike"].dtype == float


def test_frames_use_fixed_decimals(tmp_path):
    import pandas as pd

    path = write_frame(pd.DataFrame({"pnl": [1 / 3]}), tmp_path / "f.csv")
    assert path.read_text().splitlines()[1] == "0.333333"


def test_seeding_covers_every_published_option(tmp_path, monkeypatch, chain_file):
    (tmp_path / "fixtures").mkdir()
    (tmp_path / "reference").mkdir()
    shutil.copy(FIXTURES / "asset_paths.csv", tmp_path / "fixtures" / "asset_paths.csv")
    shutil.copy(REFERENCE / "published_pnl.csv", tmp_path / "reference" / "published_pnl.csv")
    monkeypatch.setenv("HEDGER_DATA_DIR", str(tmp_path))

    quotes = seed_data()
    assert len(quotes) == 80
    written = load_option_chain(tmp_path / "fixtures" / "option_chain.csv")
    shipped = {q.key: q for q in load_option_chain(chain_file)}
    assert {q.key for q in written} == set(shipped)
    for quote in written:
        assert quote.mid == pytest.approx(shipped[quote.key].mid, abs=1e-3)


def test_seeding_rejects_a_strike_the_prices_cannot_support(tmp_path):
    (tmp_path / "fixtures").mkdir()
    (tmp_path / "reference").mkdir()
    shutil.copy(FIXTURES / "asset_paths.csv", tmp_path / "fixtures" / "asset_paths.csv")
    rows = (REFERENCE / "published_pnl.csv").read_text().splitlines()
    header = rows[0].split(",")
    bad = rows[1].split(",")
    bad[header.index("strike")] = "-5"
    (tmp_path / "reference" / "published_pnl.csv").write_text("\n".join([rows[0], ",".join(bad)]) + "\n")
    with pytest.raises(DataError):
        seed_data(tmp_path)
