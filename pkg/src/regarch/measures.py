"""Realized volatility measures: RV, RR, sub-sampled and scaled variants,
and the Parzen-weighted realized kernel.

All estimators work on a single day's price grid: the opening price followed
by the bar closes, at the data's native interval. Sub-sampling averages the
coarse-grid estimator over every offset of the coarse window on the fine
grid; partial windows at the end of the day are dropped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .data import DailySeries, IntradayDay, IntradaySeries

__all__ = [
    "MEASURE_KINDS",
    "KernelConfig",
    "MeasureConfig",
    "RealizedPanel",
    "realized_variance",
    "realized_range",
    "subsampled_measure",
    "scaled_measure",
    "parzen_weight",
    "realized_kernel",
    "build_measure_panel",
]

log = logging.getLogger(__name__)

FOUR_LOG2 = 4.0 * math.log(2.0)

MEASURE_KINDS = ("rv", "rr", "rvss", "rrss", "rvscaled", "rrscaled", "rk")


@dataclass(frozen=True)
class KernelConfig:
    c_star: float = 3.5134
    quarticity_minutes: int = 15
    max_bandwidth: int | None = None


@dataclass(frozen=True)
class MeasureConfig:
    coarse_minutes: int = 5
    scale_window: int = 66
    kernel: KernelConfig = field(default_factory=KernelConfig)


@dataclass(frozen=True)
class RealizedPanel:
    dates: list[date]
    values: np.ndarray  # days x kinds, strictly positive
    kinds: list[str]
    dropped: list[tuple[date, str]] = field(default_factory=list)

    @property
    def n_measures(self) -> int:
        return int(self.values.shape[1])

    def column(self, kind: str) -> np.ndarray:
        return self.values[:, self.kinds.index(kind)]


def _price_grid(day: IntradayDay) -> np.ndarray:
    """Opening price followed by bar closes (N+1 points for N bars)."""
    return np.concatenate(([day.opens[0]], day.closes))


def realized_variance(closes) -> float:
    """Sum of squared log increments along an ordered price grid."""
    closes = np.asarray(closes, dtype=float)
    if closes.shape[0] < 2:
        raise ValueError("need at least two prices for a realized variance")
    return float(np.sum(np.diff(np.log(closes)) ** 2))


def realized_range(highs, lows) -> float:
    """Sum of squared log high-low ranges, divided by 4 log 2."""
    highs = np.asarray(highs, dtype=float)
    lows = np.asarray(lows, dtype=float)
    if highs.shape[0] < 1:
        raise ValueError("need at least one interval for a realized range")
    if np.any(highs < lows):
        raise ValueError("interval high below low")
    return float(np.sum((np.log(highs) - np.log(lows)) ** 2) / FOUR_LOG2)


def _subsampled_rv(grid: np.ndarray, n_sub: int) -> float:
    n = grid.shape[0] - 1
    logp = np.log(grid)
    total = 0.0
    for i in range(n_sub):
        pts = logp[i::n_sub]
        if pts.shape[0] >= 2:
            total += float(np.sum(np.diff(pts) ** 2))
    return total / n_sub


def _subsampled_rr(highs: np.ndarray, lows: np.ndarray, n_sub: int) -> float:
    n = highs.shape[0]
    lh = np.log(highs)
    ll = np.log(lows)
    total = 0.0
    for i in range(n_sub):
        start = i
        while start + n_sub <= n:
            w_hi = np.max(lh[start : start + n_sub])
            w_lo = np.min(ll[start : start + n_sub])
            total += (w_hi - w_lo) ** 2
            start += n_sub
    return total / (FOUR_LOG2 * n_sub)


def subsampled_measure(kind: str, day: IntradayDay, coarse_minutes: int, interval_minutes: int) -> float:
    """Average of the coarse-grid estimator over all fine-grid offsets."""
    if coarse_minutes % interval_minutes != 0:
        raise ValueError(
            f"coarse interval {coarse_minutes} not a multiple of the bar interval {interval_minutes}"
        )
    n_sub = coarse_minutes // interval_minutes
    if kind in ("rv", "rvss"):
        return _subsampled_rv(_price_grid(day), n_sub)
    if kind in ("rr", "rrss"):
        return _subsampled_rr(day.highs, day.lows, n_sub)
    raise ValueError(f"sub-sampling undefined for measure kind {kind!r}")


def scaled_measure(intraday_today: float, daily_history, intraday_history) -> float:
    """Rescale today's intraday measure by the daily/intraday history ratio."""
    daily_history = np.asarray(daily_history, dtype=float)
    intraday_history = np.asarray(intraday_history, dtype=float)
    if daily_history.shape != intraday_history.shape or daily_history.ndim != 1:
        raise ValueError("histories must be 1-d arrays of equal length")
    denom = float(np.sum(intraday_history))
    if denom <= 0.0:
        raise ValueError("degenerate history: intraday measures sum to zero")
    return float(intraday_today) * float(np.sum(daily_history)) / denom


def parzen_weight(x):
    """Parzen kernel weight; 1 at 0, 0 beyond 1, continuous at the knot."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("Parzen weight argument must be non-negative")
    inner = 1.0 - 6.0 * x**2 + 6.0 * x**3
    outer = 2.0 * (1.0 - x) ** 3
    out = np.where(x <= 0.5, inner, np.where(x <= 1.0, outer, 0.0))
    return out if out.ndim else float(out)


def _plain_rv_on_stride(grid: np.ndarray, stride: int) -> float:
    pts = np.log(grid[::stride])
    if pts.shape[0] < 2:
        pts = np.log(grid[:: max(1, grid.shape[0] - 1)])
    return float(np.sum(np.diff(pts) ** 2))


def realized_kernel(day: IntradayDay, interval_minutes: int, cfg: KernelConfig | None = None) -> float:
    """Parzen-weighted autocovariance estimator at the native bar frequency.

    Bandwidth follows H* = c* xi^(4/5) n^(3/5) with the noise ratio estimated
    from the dense-grid variance and a 15-minute-grid quarticity proxy,
    rounded down and floored at 1. Weights enter as k(|h| / (H + 1)).
    """
    cfg = cfg or KernelConfig()
    grid = _price_grid(day)
    if grid.shape[0] < 2:
        raise ValueError("need at least two prices for the realized kernel")
    x = np.diff(np.log(grid))
    n = x.shape[0]
    rv_dense = float(np.sum(x * x))
    if rv_dense == 0.0:
        log.warning("degenerate day %s: constant prices, zero-bandwidth kernel", day.day)
        return 0.0

    omega2 = rv_dense / (2.0 * n)
    sparse_stride = max(1, cfg.quarticity_minutes // interval_minutes)
    rv_sparse = _plain_rv_on_stride(grid, sparse_stride)
    if rv_sparse <= 0.0:
        rv_sparse = rv_dense
    # Noise ratio omega^2 / sqrt(IQ) with the quarticity proxied by the
    # squared sparse-grid variance; keeps xi dimensionless.
    xi2 = omega2 / rv_sparse

    h_star = cfg.c_star * xi2 ** (2.0 / 5.0) * n ** (3.0 / 5.0)
    cap = cfg.max_bandwidth if cfg.max_bandwidth is not None else n - 1
    bandwidth = int(min(max(math.floor(h_star), 1), cap))

    total = rv_dense  # h = 0 term
    for h in range(1, bandwidth + 1):
        gamma_h = float(np.dot(x[h:], x[:-h]))
        total += 2.0 * parzen_weight(h / (bandwidth + 1.0)) * gamma_h
    if total < -1e-12:
        raise AssertionError(f"Parzen kernel produced a negative estimate: {total}")
    return max(total, 0.0)


def _daily_squares(daily: DailySeries) -> tuple[dict[date, float], dict[date, float]]:
    ret2 = {}
    for i in range(1, len(daily)):
        r = math.log(daily.closes[i]) - math.log(daily.closes[i - 1])
        ret2[daily.dates[i]] = r * r
    rng2 = {
        daily.dates[i]: (math.log(daily.highs[i]) - math.log(daily.lows[i])) ** 2 / FOUR_LOG2
        for i in range(len(daily))
    }
    return ret2, rng2


def build_measure_panel(
    series: IntradaySeries,
    daily: DailySeries | None,
    kinds,
    cfg: MeasureConfig | None = None,
    precomputed: dict[str, dict[date, float]] | None = None,
) -> RealizedPanel:
    """Assemble an aligned per-day panel of the requested measure kinds.

    Days on which any requested measure is unavailable (short day, missing
    precomputed value, not enough scaling history) are dropped and reported.
    Precomputed values, when supplied for a kind, are used verbatim.
    """
    cfg = cfg or MeasureConfig()
    kinds = [k.lower() for k in kinds]
    for k in kinds:
        if k not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {k!r}; expected one of {MEASURE_KINDS}")
    if len(set(kinds)) != len(kinds):
        raise ValueError("duplicate measure kinds requested")
    precomputed = {k.lower(): v for k, v in (precomputed or {}).items()}

    needs_daily = any(k in ("rvscaled", "rrscaled") and k not in precomputed for k in kinds)
    if needs_daily and daily is None:
        raise ValueError("scaled measures need a daily series for the scaling numerator")

    computable = [d for d in series.days if d.n_bars >= 2]
    columns: dict[str, dict[date, float]] = {}
    drop_reasons: dict[date, str] = {}
    for d in series.days:
        if d.n_bars < 2:
            drop_reasons[d.day] = "fewer than two bars"

    for kind in kinds:
        if kind in precomputed:
            columns[kind] = dict(precomputed[kind])
            continue
        col: dict[date, float] = {}
        if kind in ("rv", "rvss", "rr", "rrss"):
            if cfg.coarse_minutes % series.interval_minutes != 0:
                raise ValueError("coarse interval must be a multiple of the bar interval")
            stride = cfg.coarse_minutes // series.interval_minutes
            for d in computable:
                if kind == "rv":
                    col[d.day] = _plain_rv_on_stride(_price_grid(d), stride)
                elif kind == "rvss":
                    col[d.day] = _subsampled_rv(_price_grid(d), stride)
                elif kind == "rr":
                    col[d.day] = _coarse_rr(d, stride)
                else:
                    col[d.day] = _subsampled_rr(d.highs, d.lows, stride)
        elif kind == "rk":
            for d in computable:
                col[d.day] = realized_kernel(d, series.interval_minutes, cfg.kernel)
        elif kind in ("rvscaled", "rrscaled"):
            ret2, rng2 = _daily_squares(daily)
            daily_map = ret2 if kind == "rvscaled" else rng2
            stride = cfg.coarse_minutes // series.interval_minutes
            intraday_map = {}
            for d in computable:
                if kind == "rvscaled":
                    intraday_map[d.day] = _plain_rv_on_stride(_price_grid(d), stride)
                else:
                    intraday_map[d.day] = _coarse_rr(d, stride)
            ordered = [d.day for d in computable]
            q = cfg.scale_window
            for idx, day in enumerate(ordered):
                hist = [t for t in ordered[max(0, idx - q) : idx] if t in daily_map]
                if len(hist) < q:
                    continue
                col[day] = scaled_measure(
                    intraday_map[day],
                    [daily_map[t] for t in hist],
                    [intraday_map[t] for t in hist],
                )
        columns[kind] = col

    dates = []
    rows = []
    for d in series.days:
        day = d.day
        if day in drop_reasons:
            continue
        row = []
        missing = None
        for kind in kinds:
            v = columns[kind].get(day)
            if v is None:
                missing = f"missing {kind}"
                break
            if not v > 0.0:
                missing = f"non-positive {kind}"
                break
            row.append(v)
        if missing:
            drop_reasons[day] = missing
            continue
        dates.append(day)
        rows.append(row)
    if not dates:
        raise ValueError("no day has all requested measures; empty panel")
    return RealizedPanel(
        dates=dates,
        values=np.array(rows, dtype=float),
        kinds=kinds,
        dropped=sorted(drop_reasons.items()),
    )


def _coarse_rr(day: IntradayDay, stride: int) -> float:
    """Plain realized range on the coarse grid (offset-zero windows only)."""
    n = day.highs.shape[0]
    lh = np.log(day.highs)
    ll = np.log(day.lows)
    total = 0.0
    start = 0
    while start + stride <= n:
        total += (np.max(lh[start : start + stride]) - np.min(ll[start : start + stride])) ** 2
        start += stride
    return total / FOUR_LOG2
