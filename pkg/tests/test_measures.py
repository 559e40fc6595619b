import math
from datetime import date, timedelta

import numpy as np
import pytest

from regarch import measures
from regarch.data import DailySeries, IntradayDay, IntradaySeries
from regarch.measures import KernelConfig, MeasureConfig

FOUR_LOG2 = 4.0 * math.log(2.0)


def day_from_grid(grid, day=date(2020, 1, 6), spread=0.0):
    """Build an intraday day whose price grid (open + closes) equals `grid`."""
    grid = np.asarray(grid, dtype=float)
    opens = grid[:-1]
    closes = grid[1:]
    highs = np.maximum(opens, closes) * (1.0 + spread)
    lows = np.minimum(opens, closes) * (1.0 - spread)
    n = closes.shape[0]
    ts = np.array(
        [np.datetime64(f"{day.isoformat()}T10:00:00") + np.timedelta64(60 * i, "s") for i in range(n)]
    )
    return IntradayDay(day=day, timestamps=ts, opens=opens, highs=highs, lows=lows, closes=closes)


def random_walk_day(rng, n_bars=78, sigma2=1e-4, day=date(2020, 1, 6)):
    incr = rng.normal(0.0, math.sqrt(sigma2 / n_bars), size=n_bars)
    grid = 100.0 * np.exp(np.concatenate(([0.0], np.cumsum(incr))))
    return day_from_grid(grid, day=day)


class TestRealizedVariance:
    def test_constant_prices(self):
        assert measures.realized_variance(np.full(10, 50.0)) == 0.0

    def test_hand_sum_of_squares(self):
        grid = 100.0 * np.exp(np.array([0.0, 0.01, -0.01]))
        assert measures.realized_variance(grid) == pytest.approx(0.0005, abs=1e-15)

    def test_price_scale_invariance(self):
        rng = np.random.default_rng(1)
        grid = 100.0 * np.exp(np.cumsum(rng.normal(0, 0.002, 40)))
        assert measures.realized_variance(grid) == pytest.approx(
            measures.realized_variance(3.7 * grid), rel=1e-12
        )

    def test_insufficient_data(self):
        with pytest.raises(ValueError):
            measures.realized_variance([100.0])


class TestRealizedRange:
    def test_zero_ranges(self):
        assert measures.realized_range(np.full(5, 10.0), np.full(5, 10.0)) == 0.0

    def test_hand_value(self):
        v = measures.realized_range([2.0], [1.0])
        assert v == pytest.approx(math.log(2.0) / 4.0, abs=1e-12)
        assert v == pytest.approx(0.173287, abs=1e-6)

    def test_additivity(self):
        one = measures.realized_range([2.0], [1.0])
        two = measures.realized_range([2.0, 2.0], [1.0, 1.0])
        assert two == pytest.approx(2.0 * one, abs=1e-15)

    def test_high_below_low(self):
        with pytest.raises(ValueError):
            measures.realized_range([1.0], [2.0])


class TestSubsampled:
    def test_degenerate_equals_plain(self):
        rng = np.random.default_rng(2)
        d = random_walk_day(rng)
        plain = measures.realized_variance(np.concatenate(([d.opens[0]], d.closes)))
        ss = measures.subsampled_measure("rvss", d, coarse_minutes=1, interval_minutes=1)
        assert ss == plain

    def test_constant_prices_zero(self):
        d = day_from_grid(np.full(11, 100.0))
        assert measures.subsampled_measure("rvss", d, 5, 1) == 0.0
        assert measures.subsampled_measure("rrss", d, 5, 1) == 0.0

    def test_brute_force_offsets(self):
        # 10-bar day, 5/1 sub-sampling: mean of the 5 offset-grid estimators.
        rng = np.random.default_rng(3)
        d = random_walk_day(rng, n_bars=10)
        grid = np.log(np.concatenate(([d.opens[0]], d.closes)))
        vals = []
        for i in range(5):
            pts = grid[i::5]
            vals.append(np.sum(np.diff(pts) ** 2))
        oracle = float(np.mean(vals))
        got = measures.subsampled_measure("rvss", d, 5, 1)
        assert got == pytest.approx(oracle, rel=1e-12)

    def test_brute_force_range_offsets(self):
        rng = np.random.default_rng(4)
        d = random_walk_day(rng, n_bars=10)
        lh, ll = np.log(d.highs), np.log(d.lows)
        total = 0.0
        for i in range(5):
            start = i
            while start + 5 <= 10:
                total += (np.max(lh[start : start + 5]) - np.min(ll[start : start + 5])) ** 2
                start += 5
        oracle = total / (FOUR_LOG2 * 5)
        got = measures.subsampled_measure("rrss", d, 5, 1)
        assert got == pytest.approx(oracle, rel=1e-12)

    def test_non_divisible_interval(self):
        d = random_walk_day(np.random.default_rng(5))
        with pytest.raises(ValueError):
            measures.subsampled_measure("rvss", d, 5, 2)

    def test_mean_ratio_to_plain(self):
        # Noiseless diffusion over a full session: sub-sampled and plain
        # estimators agree on average.
        rng = np.random.default_rng(6)
        ss, plain = [], []
        for i in range(200):
            d = random_walk_day(rng, n_bars=390)
            grid = np.concatenate(([d.opens[0]], d.closes))
            plain.append(measures.realized_variance(grid[::5]))
            ss.append(measures.subsampled_measure("rvss", d, 5, 1))
        ratio = np.mean(ss) / np.mean(plain)
        assert abs(ratio - 1.0) < 0.02


class TestScaled:
    def test_identity_scaling(self):
        hist = np.linspace(1.0, 2.0, 66)
        assert measures.scaled_measure(0.5, hist, hist) == pytest.approx(0.5, rel=1e-14)

    def test_linear_in_numerator(self):
        hist = np.linspace(1.0, 2.0, 66)
        one = measures.scaled_measure(0.5, hist, hist)
        two = measures.scaled_measure(0.5, 2.0 * hist, hist)
        assert two == pytest.approx(2.0 * one, rel=1e-14)

    def test_direct_formula_oracle(self):
        rng = np.random.default_rng(7)
        daily = rng.uniform(0.5, 1.5, 66)
        intraday = rng.uniform(0.5, 1.5, 66)
        got = measures.scaled_measure(0.8, daily, intraday)
        assert got == pytest.approx(0.8 * daily.sum() / intraday.sum(), rel=1e-14)

    def test_degenerate_history(self):
        with pytest.raises(ValueError):
            measures.scaled_measure(1.0, np.ones(5), np.zeros(5))


class TestParzen:
    def test_knots(self):
        assert measures.parzen_weight(0.0) == 1.0
        assert measures.parzen_weight(1.0) == 0.0

    def test_continuity_at_half(self):
        inner = 1.0 - 6.0 * 0.25 + 6.0 * 0.125
        outer = 2.0 * 0.5**3
        assert inner == outer == 0.25
        assert measures.parzen_weight(0.5) == pytest.approx(0.25, abs=1e-15)

    def test_zero_beyond_one(self):
        assert measures.parzen_weight(1.4) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            measures.parzen_weight(-0.1)

    def test_range(self):
        x = np.linspace(0, 2, 100)
        w = measures.parzen_weight(x)
        assert np.all((w >= 0.0) & (w <= 1.0))


class TestRealizedKernel:
    def test_zero_bandwidth_equals_rv(self):
        rng = np.random.default_rng(8)
        d = random_walk_day(rng)
        cfg = KernelConfig(max_bandwidth=0)
        rv = measures.realized_variance(np.concatenate(([d.opens[0]], d.closes)))
        assert measures.realized_kernel(d, 5, cfg) == pytest.approx(rv, rel=1e-14)

    def test_degenerate_day_returns_zero(self):
        d = day_from_grid(np.full(40, 100.0))
        assert measures.realized_kernel(d, 1) == 0.0

    def test_edge_weights_positive(self):
        # The h = +-H terms receive weight k(H / (H + 1)) > 0.
        assert measures.parzen_weight(5.0 / 6.0) > 0.0

    def test_monte_carlo_matches_rv_without_noise(self):
        rng = np.random.default_rng(9)
        rk, rv = [], []
        for i in range(200):
            d = random_walk_day(rng, n_bars=390)
            grid = np.concatenate(([d.opens[0]], d.closes))
            rv.append(measures.realized_variance(grid))
            rk.append(measures.realized_kernel(d, 1))
        assert np.all(np.asarray(rk) >= 0.0)
        assert abs(np.mean(rk) / np.mean(rv) - 1.0) < 0.05


class TestPanel:
    def build_series(self, n_days=2, n_bars=60, seed=10):
        rng = np.random.default_rng(seed)
        days = [
            random_walk_day(rng, n_bars=n_bars, day=date(2020, 1, 6) + timedelta(days=i))
            for i in range(n_days)
        ]
        return IntradaySeries(days=days, interval_minutes=1)

    def daily_for(self, series, seed=11):
        rng = np.random.default_rng(seed)
        n = len(series.days)
        closes = 100.0 * np.exp(np.cumsum(rng.normal(0, 0.01, n)))
        return DailySeries(
            dates=[d.day for d in series.days],
            opens=closes,
            highs=closes * 1.01,
            lows=closes * 0.99,
            closes=closes,
        )

    def test_single_kind_two_days(self):
        s = self.build_series()
        panel = measures.build_measure_panel(s, None, ["rvss"])
        assert panel.values.shape == (2, 1)
        assert panel.kinds == ["rvss"]

    def test_column_ordering(self):
        s = self.build_series(n_days=3)
        panel = measures.build_measure_panel(s, None, ["rvss", "rrss", "rk"])
        assert panel.kinds == ["rvss", "rrss", "rk"]
        assert panel.values.shape == (3, 3)
        assert np.all(panel.values > 0)

    def test_precomputed_pass_through(self):
        s = self.build_series(n_days=2)
        pre = {"rk": {s.days[0].day: 0.123, s.days[1].day: 0.456}}
        panel = measures.build_measure_panel(s, None, ["rvss", "rk"], precomputed=pre)
        assert list(panel.column("rk")) == [0.123, 0.456]

    def test_missing_precomputed_day_dropped(self):
        s = self.build_series(n_days=3)
        pre = {"rk": {s.days[0].day: 0.1, s.days[2].day: 0.2}}
        panel = measures.build_measure_panel(s, None, ["rk"], precomputed=pre)
        assert len(panel.dates) == 2
        assert any(day == s.days[1].day for day, _ in panel.dropped)

    def test_scaled_needs_history(self):
        s = self.build_series(n_days=80)
        daily = self.daily_for(s)
        cfg = MeasureConfig(scale_window=66)
        panel = measures.build_measure_panel(s, daily, ["rvscaled"], cfg)
        # first q days lack history (and day 1 has no prior close for a return)
        assert len(panel.dates) == 80 - 66 - 1
        assert np.all(panel.values > 0)

    def test_scale_invariance_of_panel(self):
        s = self.build_series(n_days=2)
        scaled_days = [
            IntradayDay(
                day=d.day,
                timestamps=d.timestamps,
                opens=2.5 * d.opens,
                highs=2.5 * d.highs,
                lows=2.5 * d.lows,
                closes=2.5 * d.closes,
            )
            for d in s.days
        ]
        s2 = IntradaySeries(days=scaled_days, interval_minutes=1)
        p1 = measures.build_measure_panel(s, None, ["rvss", "rrss", "rk"])
        p2 = measures.build_measure_panel(s2, None, ["rvss", "rrss", "rk"])
        assert np.allclose(p1.values, p2.values, rtol=1e-10)

    def test_empty_intersection_raises(self):
        s = self.build_series(n_days=1)
        with pytest.raises(ValueError):
            measures.build_measure_panel(s, None, ["rk"], precomputed={"rk": {}})
