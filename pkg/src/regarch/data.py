"""Market data ingestion: intraday bars, daily OHLC, and log returns.

CSV contracts:
  intraday      header ``timestamp,open,high,low,close``, ISO-8601 timestamps
  daily         header ``date,open,high,low,close``
  precomputed   header ``date,measure_name,value`` (per-day realized measures)

Parsing is total: every row either yields a bar or raises an error that names
the offending line. Loaded series are immutable in practice (plain arrays,
never mutated) and safe to share.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

__all__ = [
    "DataFileError",
    "IntradayDay",
    "IntradaySeries",
    "DailySeries",
    "ReturnSeries",
    "load_intraday",
    "load_daily",
    "load_precomputed_measures",
    "daily_log_returns",
]


class DataFileError(ValueError):
    """Malformed or invariant-breaking input row; carries the 1-based line."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class IntradayDay:
    day: date
    timestamps: np.ndarray  # datetime64[s]
    opens: np.ndarray
    highs: np.ndarray
    lows: np.ndarray
    closes: np.ndarray

    @property
    def n_bars(self) -> int:
        return int(self.closes.shape[0])


@dataclass(frozen=True)
class IntradaySeries:
    days: list[IntradayDay]
    interval_minutes: int
    short_days: list[date] = field(default_factory=list)

    @property
    def dates(self) -> list[date]:
        return [d.day for d in self.days]

    @property
    def bar_counts(self) -> list[int]:
        return [d.n_bars for d in self.days]


@dataclass(frozen=True)
class DailySeries:
    dates: list[date]
    opens: np.ndarray
    highs: np.ndarray
    lows: np.ndarray
    closes: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    dates: list[date]
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


def _parse_price_fields(path, lineno, row, names):
    out = []
    for name, raw in zip(names, row):
        try:
            v = float(raw)
        except ValueError:
            raise DataFileError(path, lineno, f"cannot parse {name} value {raw!r}") from None
        if not v > 0.0:
            raise DataFileError(path, lineno, f"{name} must be positive, got {raw}")
        out.append(v)
    return out


def _check_ohlc(path, lineno, o, h, l, c):
    if h < l:
        raise DataFileError(path, lineno, f"high {h} below low {l}")
    if l > min(o, c) or h < max(o, c):
        raise DataFileError(path, lineno, "open/close outside the high-low range")


def load_intraday(path, interval_minutes: int) -> IntradaySeries:
    """Read an intraday CSV and group validated bars by trading day."""
    if interval_minutes < 1:
        raise ValueError("interval_minutes must be a positive integer")
    rows_by_day: dict[date, list] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["timestamp", "open", "high", "low", "close"]:
            raise DataFileError(path, 1, "expected header timestamp,open,high,low,close")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFileError(path, lineno, f"expected 5 fields, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0].strip())
            except ValueError:
                raise DataFileError(path, lineno, f"cannot parse timestamp {row[0]!r}") from None
            o, h, l, c = _parse_price_fields(path, lineno, row[1:], ("open", "high", "low", "close"))
            _check_ohlc(path, lineno, o, h, l, c)
            rows_by_day.setdefault(ts.date(), []).append((lineno, ts, o, h, l, c))

    days = []
    short = []
    for day in sorted(rows_by_day):
        rows = rows_by_day[day]
        for (prev_line, prev_ts, *_), (line, ts, *_) in zip(rows, rows[1:]):
            if ts <= prev_ts:
                raise DataFileError(path, line, f"timestamp {ts} not after {prev_ts}")
        arr = lambda i: np.array([r[i] for r in rows], dtype=float)
        days.append(
            IntradayDay(
                day=day,
                timestamps=np.array([np.datetime64(r[1], "s") for r in rows]),
                opens=arr(2),
                highs=arr(3),
                lows=arr(4),
                closes=arr(5),
            )
        )
        if len(rows) < 2:
            short.append(day)
    return IntradaySeries(days=days, interval_minutes=int(interval_minutes), short_days=short)


def load_daily(path) -> DailySeries:
    """Read a daily OHLC CSV with strictly increasing dates."""
    dates: list[date] = []
    cols = ([], [], [], [])
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "open", "high", "low", "close"]:
            raise DataFileError(path, 1, "expected header date,open,high,low,close")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFileError(path, lineno, f"expected 5 fields, got {len(row)}")
            try:
                d = date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataFileError(path, lineno, f"cannot parse date {row[0]!r}") from None
            if dates and d <= dates[-1]:
                raise DataFileError(path, lineno, f"date {d} not after {dates[-1]}")
            o, h, l, c = _parse_price_fields(path, lineno, row[1:], ("open", "high", "low", "close"))
            _check_ohlc(path, lineno, o, h, l, c)
            dates.append(d)
            for col, v in zip(cols, (o, h, l, c)):
                col.append(v)
    return DailySeries(
        dates=dates,
        opens=np.array(cols[0]),
        highs=np.array(cols[1]),
        lows=np.array(cols[2]),
        closes=np.array(cols[3]),
    )


def load_precomputed_measures(path) -> dict[str, dict[date, float]]:
    """Read per-day precomputed measure values, keyed by measure name."""
    out: dict[str, dict[date, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "measure_name", "value"]:
            raise DataFileError(path, 1, "expected header date,measure_name,value")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataFileError(path, lineno, f"expected 3 fields, got {len(row)}")
            try:
                d = date.fromisoformat(row[0].strip())
                v = float(row[2])
            except ValueError:
                raise DataFileError(path, lineno, "cannot parse date or value") from None
            out.setdefault(row[1].strip().lower(), {})[d] = v
    return out


def daily_log_returns(daily: DailySeries) -> ReturnSeries:
    """Close-to-close log returns; the t-th value belongs to the later date."""
    if len(daily) < 2:
        raise ValueError("need at least two days to form returns")
    closes = daily.closes
    if np.any(closes <= 0.0):
        raise ValueError("non-positive close price")
    return ReturnSeries(dates=daily.dates[1:], values=np.diff(np.log(closes)))
