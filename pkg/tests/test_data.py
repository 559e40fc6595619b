import math
from datetime import date, datetime, timedelta

import numpy as np
import pytest

from regarch import data


def write_intraday(path, days=2, bars=78, interval=5, start_price=100.0, jumble=None):
    lines = ["timestamp,open,high,low,close"]
    price = start_price
    for d in range(days):
        t0 = datetime(2020, 1, 6 + d, 10, 0)
        for b in range(bars):
            ts = t0 + timedelta(minutes=interval * b)
            o = price
            c = price * (1.0 + 0.0005 * ((b % 5) - 2))
            h = max(o, c) * 1.0002
            l = min(o, c) * 0.9998
            lines.append(f"{ts.isoformat()},{o},{h},{l},{c}")
            price = c
    if jumble:
        lines[jumble[0]] = jumble[1]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_daily(path, closes, start=date(2020, 1, 6)):
    lines = ["date,open,high,low,close"]
    d = start
    for c in closes:
        lines.append(f"{d.isoformat()},{c},{c * 1.01},{c * 0.99},{c}")
        d += timedelta(days=1)
    path.write_text("\n".join(lines) + "\n")
    return path


class TestLoadIntraday:
    def test_two_day_file(self, tmp_path):
        p = write_intraday(tmp_path / "i.csv", days=2, bars=78)
        s = data.load_intraday(p, interval_minutes=5)
        assert len(s.days) == 2
        assert s.bar_counts == [78, 78]
        assert s.short_days == []

    def test_high_below_low_names_row(self, tmp_path):
        p = write_intraday(
            tmp_path / "i.csv",
            jumble=(3, "2020-01-06T10:10:00,100,99,101,100"),
        )
        with pytest.raises(data.DataFileError) as exc:
            data.load_intraday(p, 5)
        assert exc.value.line == 4

    def test_deterministic_parse(self, tmp_path):
        p = write_intraday(tmp_path / "i.csv")
        a = data.load_intraday(p, 5)
        b = data.load_intraday(p, 5)
        for da, db in zip(a.days, b.days):
            assert da.day == db.day
            assert np.array_equal(da.closes, db.closes)

    def test_non_monotone_timestamps(self, tmp_path):
        p = write_intraday(
            tmp_path / "i.csv",
            jumble=(4, "2020-01-06T10:05:00,100,100.1,99.9,100"),
        )
        with pytest.raises(data.DataFileError):
            data.load_intraday(p, 5)

    def test_malformed_row_has_line_number(self, tmp_path):
        p = write_intraday(tmp_path / "i.csv", jumble=(5, "not-a-time,1,2,0.5,1"))
        with pytest.raises(data.DataFileError) as exc:
            data.load_intraday(p, 5)
        assert exc.value.line == 6

    def test_nonpositive_price_rejected(self, tmp_path):
        p = write_intraday(tmp_path / "i.csv", jumble=(3, "2020-01-06T10:10:00,-1,2,0.5,1"))
        with pytest.raises(data.DataFileError):
            data.load_intraday(p, 5)

    def test_short_day_flagged(self, tmp_path):
        p = tmp_path / "i.csv"
        p.write_text(
            "timestamp,open,high,low,close\n"
            "2020-01-06T10:00:00,100,101,99,100\n"
            "2020-01-07T10:00:00,100,101,99,100\n"
            "2020-01-07T10:05:00,100,101,99,100\n"
        )
        s = data.load_intraday(p, 5)
        assert s.short_days == [date(2020, 1, 6)]


class TestDailyReturns:
    def test_flat_prices(self, tmp_path):
        d = data.load_daily(write_daily(tmp_path / "d.csv", [100, 100]))
        r = data.daily_log_returns(d)
        assert r.values == pytest.approx([0.0])

    def test_hand_value(self, tmp_path):
        d = data.load_daily(write_daily(tmp_path / "d.csv", [100, 105]))
        r = data.daily_log_returns(d)
        assert r.values[0] == pytest.approx(0.048790, abs=1e-6)

    def test_symmetry(self, tmp_path):
        d = data.load_daily(write_daily(tmp_path / "d.csv", [100, 105, 100]))
        r = data.daily_log_returns(d)
        assert r.values[1] == pytest.approx(-math.log(1.05), abs=1e-12)

    def test_telescoping_sum(self, tmp_path):
        closes = 100 * np.exp(np.cumsum(np.random.default_rng(0).normal(0, 0.01, 250)))
        d = data.load_daily(write_daily(tmp_path / "d.csv", list(np.round(closes, 6))))
        r = data.daily_log_returns(d)
        assert float(np.sum(r.values)) == pytest.approx(
            math.log(d.closes[-1] / d.closes[0]), abs=1e-12
        )

    def test_length_contract(self, tmp_path):
        d = data.load_daily(write_daily(tmp_path / "d.csv", [100, 101, 102, 103]))
        assert len(data.daily_log_returns(d)) == len(d) - 1

    def test_too_short(self, tmp_path):
        d = data.load_daily(write_daily(tmp_path / "d.csv", [100]))
        with pytest.raises(ValueError):
            data.daily_log_returns(d)


class TestPrecomputed:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(
            "date,measure_name,value\n"
            "2020-01-06,rk,0.0001\n"
            "2020-01-07,rk,0.0002\n"
            "2020-01-06,rvss,0.00015\n"
        )
        m = data.load_precomputed_measures(p)
        assert m["rk"][date(2020, 1, 6)] == 0.0001
        assert set(m) == {"rk", "rvss"}

    def test_bad_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("day,name,value\n")
        with pytest.raises(data.DataFileError):
            data.load_precomputed_measures(p)
