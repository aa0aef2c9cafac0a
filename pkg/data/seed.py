"""
Writes data/fixtures/option_chain.csv: the empirical option triples (symbol,
maturity, strike) with the 2023-08-17 closes. Mid quotes are not published, so
each mid is the European Black-Scholes put at an illustrative per-symbol vol.
"""
from datetime import date
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from hedger.black_scholes import BsInputs, put_price
from hedger.calibration import OptionQuote
from hedger.config import get_settings
from hedger.data_io import load_price_series, load_reference_table, write_option_chain
from hedger.errors import DataError

QUOTE_DATE = date(2023, 8, 17)
RATE = 0.05

ILLUSTRATIVE_IV = {
    "AAPL": 0.22,
    "JNJ": 0.17,
    "MA": 0.20,
    "META": 0.38,
    "MSFT": 0.26,
    "NKE": 0.30,
    "NVDA": 0.50,
    "SPY": 0.15,
}


def seed_data(data_dir: Optional[Path] = None) -> list:
    data_dir = Path(data_dir) if data_dir is not None else get_settings().data_dir
    reference = load_reference_table(data_dir / "reference" / "published_pnl.csv")
    paths_file = data_dir / "fixtures" / "asset_paths.csv"

    quotes = []
    for row in reference.itertuples(index=False):
        close = load_price_series(paths_file, row.symbol).close_on(QUOTE_DATE)
        maturity = date.fromisoformat(row.maturity)
        iv = ILLUSTRATIVE_IV[row.symbol]
        tau = (maturity - QUOTE_DATE).days / 365.0
        try:
            mid = put_price(BsInputs(close, float(row.strike), RATE, iv, tau))
            quotes.append(OptionQuote(row.symbol, QUOTE_DATE, maturity, float(row.strike), round(mid, 4), iv, close))
        except ValueError as e:
            raise DataError(f"cannot seed {row.symbol} {row.maturity} {row.strike} (close {close}): {e}") from e

    write_option_chain(quotes, data_dir / "fixtures" / "option_chain.csv")
    print(f"Option chain seeded with {len(quotes)} quotes.")
    return quotes


if __name__ == "__main__":
    load_dotenv()
    seed_data()
