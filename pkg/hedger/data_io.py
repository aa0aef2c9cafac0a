"""
Data I/O
CSV loaders for option chains and daily price series, and the report writers
"""
import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from hedger.calibration import OptionCalibration, OptionQuote, SymbolParams
from hedger.errors import DataError, FormatError, LookupFailure, ParameterError, RowError

logger = logging.getLogger(__name__)

CHAIN_COLUMNS = ["symbol", "quote_date", "close", "maturity", "strike", "mid", "iv"]
CURRENCY_FORMAT = "%.6f"


def _parse_date(text: str, line: int) -> date:
    try:
        return date.fromisoformat(str(text).strip())
    except ValueError:
        raise RowError(f"unparsable date {text!r}", line)


def _parse_float(text: str, column: str, line: int) -> float:
    try:
        return float(str(text).strip())
    except ValueError:
        raise RowError(f"unparsable {column} {text!r}", line)


def _read_csv(path) -> Optional[pd.DataFrame]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return None


# ============================================================================
# Option chains
# ============================================================================

def load_option_chain(path) -> list:
    """Validated quotes; rows breaking a quote invariant are skipped with a warning."""
    frame = _read_csv(path)
    if frame is None or frame.empty:
        logger.warning(f"[Data] ⚠ Option chain {path} is empty")
        return []
    missing = [c for c in CHAIN_COLUMNS if c not in frame.columns]
    if missing:
        raise FormatError(f"option chain {path} is missing columns {missing}")

    quotes = []
    for i, row in enumerate(frame.itertuples(index=False), start=2):
        values = row._asdict()
        try:
            quote = OptionQuote(
                symbol=values["symbol"].strip(),
                quote_date=_parse_date(values["quote_date"], i),
                maturity=_parse_date(values["maturity"], i),
                strike=_parse_float(values["strike"], "strike", i),
                mid=_parse_float(values["mid"], "mid", i),
                iv=_parse_float(values["iv"], "iv", i),
                close=_parse_float(values["close"], "close", i),
            )
        except ParameterError as e:
            logger.warning(f"[Data] ⚠ Rejected line {i} of {path}: {e}")
            continue
        quotes.append(quote)
    logger.info(f"[Data] ✓ Loaded {len(quotes)} quotes from {path}")
    return quotes


def write_option_chain(quotes: Iterable[OptionQuote], path) -> Path:
    rows = [
        {
            "symbol": q.symbol,
            "quote_date": q.quote_date.isoformat(),
            "close": q.close,
            "maturity": q.maturity.isoformat(),
            "strike": q.strike,
            "mid": q.mid,
            "iv": q.iv,
        }
        for q in quotes
    ]
    return write_frame(pd.DataFrame(rows, columns=CHAIN_COLUMNS), path)


# ============================================================================
# Price series
# ============================================================================

@dataclass(frozen=True)
class PriceSeries:
    symbol: str
    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise FormatError("dates and closes differ in length")
        if any(b <= a for a, b in zip(self.dates[:-1], self.dates[1:])):
            raise FormatError(f"{self.symbol}: dates must be strictly increasing")
        if np.any(np.asarray(self.closes) <= 0):
            raise FormatError(f"{self.symbol}: closes must be positive")

    def __len__(self) -> int:
        return len(self.dates)

    def close_on(self, day: date) -> float:
        try:
            return float(self.closes[self.dates.index(day)])
        except ValueError:
            raise DataError(f"{self.symbol}: no close on {day.isoformat()}")

    def between(self, start: date, end: date) -> "PriceSeries":
        """Inclusive slice; both endpoints must be trading days in the series."""
        for day in (start, end):
            if day not in self.dates:
                raise DataError(f"{self.symbol}: missing date {day.isoformat()}")
        i, j = self.dates.index(start), self.dates.index(end)
        if j <= i:
            raise DataError(f"{self.symbol}: {end} does not follow {start}")
        return PriceSeries(self.symbol, self.dates[i : j + 1], self.closes[i : j + 1])

    def trading_days(self, start: date, end: date) -> int:
        """Rebalance count between two dates on this calendar."""
        return len(self.between(start, end)) - 1


def load_price_series(path, symbol: str) -> PriceSeries:
    frame = _read_csv(path)
    if frame is None or frame.empty:
        raise FormatError(f"price file {path} is empty")
    if "date" not in frame.columns:
        raise FormatError(f"price file {path} has no date column")
    if symbol not in frame.columns:
        raise LookupFailure(f"unknown symbol {symbol!r} in {path}")

    dates = tuple(_parse_date(d, i) for i, d in enumerate(frame["date"], start=2))
    closes = np.array(
        [_parse_float(v.replace("$", "").replace(",", ""), symbol, i) for i, v in enumerate(frame[symbol], start=2)]
    )
    series = PriceSeries(symbol, dates, closes)
    logger.debug(f"[Data] Loaded {len(series)} closes for {symbol} from {path}")
    return series


def write_price_series(series_list: list, path) -> Path:
    frame = pd.DataFrame({"date": [d.isoformat() for d in series_list[0].dates]})
    for series in series_list:
        if series.dates != series_list[0].dates:
            raise FormatError("all series must share one calendar")
        frame[series.symbol] = series.closes
    return write_frame(frame, path)


# ============================================================================
# Writers
# ============================================================================

def write_frame(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CURRENCY_FORMAT)
    logger.debug(f"[Data] Wrote {len(frame)} rows to {path}")
    return path


def write_json(payload: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
    return path


def calibration_frame(results: Iterable[OptionCalibration]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "symbol": res.quote.symbol,
                "maturity": res.quote.maturity.isoformat(),
                "strike": res.quote.strike,
                "rho": res.rho,
                "nu": res.nu,
                "objective": res.objective,
                "iterations": res.iterations,
                "converged": res.converged,
            }
            for res in results
        ]
    )


def write_symbol_params(params: dict, path) -> Path:
    return write_json(
        {s: {"rho": p.rho, "nu": p.nu, "n_options": p.n_options} for s, p in params.items()}, path
    )


def load_symbol_params(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"calibration file not found: {path}")
    with open(path) as f:
        payload = json.load(f)
    return {s: SymbolParams(s, float(p["rho"]), float(p["nu"]), int(p["n_options"])) for s, p in payload.items()}


def load_reference_table(path) -> pd.DataFrame:
    frame = _read_csv(path)
    if frame is None:
        return pd.DataFrame(columns=["symbol", "maturity", "strike", "rl_mean", "delta_mean"])
    for column in ("strike", "rl_mean", "delta_mean"):
        frame[column] = frame[column].astype(float)
    return frame
