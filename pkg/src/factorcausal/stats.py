"""Descriptive statistics, cross-correlations and tail-risk z-score indicators."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .exceptions import DataError, EstimationError
from .panel import IndicatorSeries, WindowSpec, add_months

__all__ = [
    "SummaryStats",
    "ZScoreSeries",
    "summary_stats",
    "ccf",
    "tail_es",
    "daily_observable",
    "window_es",
    "rolling_zscore",
    "indicator_zscores",
]


@dataclass(frozen=True)
class SummaryStats:
    """Annualised performance and daily distribution figures for one series.

    Returns, volatility and percentiles are in percent; ratios are plain
    numbers. ``kurtosis`` is excess kurtosis. Ratios are NaN when their
    denominator is zero.
    """

    avg_comp_ret_ann: float
    vol_ann: float
    risk_adj_ret: float
    sortino: float
    skew: float
    kurtosis: float
    pctile_1: float
    pctile_5: float
    min: float
    max: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else float("nan")


def summary_stats(returns, periods_per_year: int = 252, quantile_method: str = "linear") -> SummaryStats:
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise DataError("summary_stats needs a 1-d series with at least 2 observations")
    if not np.all(np.isfinite(r)):
        raise DataError("returns contain non-finite values")
    if np.any(r <= -1):
        raise DataError("returns at or below -100% cannot be compounded")
    T = r.size
    growth = np.exp(np.sum(np.log1p(r)) * periods_per_year / T) - 1.0
    vol = np.std(r, ddof=1) * np.sqrt(periods_per_year)
    # downside deviation around a zero target, averaged over all periods
    down = np.sqrt(np.mean(np.minimum(r, 0.0) ** 2)) * np.sqrt(periods_per_year)
    constant = np.ptp(r) == 0
    skew = float("nan") if constant else float(sps.skew(r, bias=False))
    kurt = float("nan") if constant else float(sps.kurtosis(r, fisher=True, bias=False))
    p1, p5 = np.quantile(r, [0.01, 0.05], method=quantile_method)
    return SummaryStats(
        avg_comp_ret_ann=100 * growth,
        vol_ann=100 * vol,
        risk_adj_ret=_ratio(growth, vol),
        sortino=_ratio(growth, down),
        skew=skew,
        kurtosis=kurt,
        pctile_1=100 * p1,
        pctile_5=100 * p5,
        min=100 * r.min(),
        max=100 * r.max(),
    )


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    sa, sb = np.sqrt(a @ a), np.sqrt(b @ b)
    if sa == 0 or sb == 0:
        raise EstimationError("zero variance in cross-correlation segment")
    return float(a @ b / (sa * sb))


def ccf(x, y, max_lag: int) -> np.ndarray:
    """Cross-correlations at lags ``-max_lag..max_lag``.

    Entry ``max_lag + l`` is the Pearson correlation between ``x[t - l]`` and
    ``y[t]`` over the overlapping range, so a positive lag means ``x`` leads.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("ccf needs two 1-d series of equal length")
    if max_lag < 0 or x.size <= max_lag + 2:
        raise DataError("series too short for the requested max_lag")
    n = x.size
    out = np.empty(2 * max_lag + 1)
    for l in range(-max_lag, max_lag + 1):
        if l >= 0:
            out[max_lag + l] = _pearson(x[: n - l], y[l:])
        else:
            out[max_lag + l] = _pearson(x[-l:], y[: n + l])
    return out


def tail_es(values, q: float = 0.95, method: str = "linear", min_obs: int = 20) -> float:
    """Mean of the observations strictly above the ``q``-quantile."""
    v = np.asarray(values, dtype=float)
    if v.size < min_obs:
        raise DataError(f"tail_es needs at least {min_obs} observations, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise DataError("tail_es input contains non-finite values")
    threshold = np.quantile(v, q, method=method)
    tail = v[v > threshold]
    if tail.size == 0:
        raise EstimationError("degenerate tail: no observations above the quantile")
    return float(tail.mean())


@dataclass(frozen=True)
class ZScoreSeries:
    window_index: np.ndarray
    es_value: np.ndarray
    zscore: np.ndarray
    kind: str

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.zscore)


def daily_observable(series: IndicatorSeries, kind: str, bc_transform: str = "level") -> tuple[np.ndarray, np.ndarray]:
    """Per-day quantity whose tail is summarised in each window.

    ``fear``: percent change from open to close. ``business_cycle``: the
    spread level, or its day-on-day change with ``bc_transform="diff"``.
    """
    if kind == "fear":
        if np.any(series.open == 0):
            raise DataError("zero opening level in fear indicator")
        return series.dates, 100.0 * (series.close - series.open) / series.open
    if kind == "business_cycle":
        if bc_transform == "level":
            return series.dates, np.asarray(series.close, dtype=float)
        if bc_transform == "diff":
            return series.dates[1:], np.diff(series.close)
        raise ValueError(f"unknown bc_transform {bc_transform!r}")
    raise ValueError(f"unknown indicator kind {kind!r}")


def window_es(dates, values, start: dt.date, end: dt.date, q: float = 0.95, method: str = "linear") -> float:
    """Tail ES of ``values`` falling inside ``[start, end]``; NaN when not computable."""
    d = np.asarray(dates, dtype="datetime64[D]")
    mask = (d >= np.datetime64(start, "D")) & (d <= np.datetime64(end, "D"))
    try:
        return tail_es(np.asarray(values)[mask], q, method)
    except (DataError, EstimationError):
        return float("nan")


def rolling_zscore(es, starts, history_years: float = 10, min_history: int = 4,
                   on_zero_std: str = "nan") -> np.ndarray:
    """Standardise each value against the trailing history ending at itself.

    The history for position k holds every finite value whose start date
    lies in ``(starts[k] - history_years, starts[k]]``, current one included.
    Positions with fewer than ``min_history`` such values get NaN. A zero
    trailing standard deviation yields NaN or raises, per ``on_zero_std``.
    """
    es = np.asarray(es, dtype=float)
    starts = [s if isinstance(s, dt.date) else np.datetime64(s, "D").astype(dt.date) for s in starts]
    if len(starts) != es.size:
        raise DataError("es and starts must align")
    months = int(round(history_years * 12))
    out = np.full(es.size, np.nan)
    for k, s in enumerate(starts):
        if not np.isfinite(es[k]):
            continue
        lo = add_months(s, -months)
        hist = np.array([es[j] for j in range(es.size)
                         if lo < starts[j] <= s and np.isfinite(es[j])])
        if hist.size < min_history:
            continue
        sd = hist.std(ddof=1)
        if sd == 0:
            if on_zero_std == "raise":
                raise EstimationError(f"trailing standard deviation is zero at position {k}")
            continue
        out[k] = (es[k] - hist.mean()) / sd
    return out


def indicator_zscores(series: IndicatorSeries, windows: list[WindowSpec], kind: str,
                      history_years: float = 10, min_history: int = 4, q: float = 0.95,
                      bc_transform: str = "level", quantile_method: str = "linear",
                      on_zero_std: str = "nan") -> ZScoreSeries:
    """Per-window tail ES of an indicator and its trailing z-score.

    The window grid is extended backwards (same length and step) as far as
    the indicator's history reaches, so that early analysis windows can be
    scored against earlier data.
    """
    if not windows:
        raise DataError("no windows given")
    dates, obs = daily_observable(series, kind, bc_transform)
    first_obs = np.datetime64(dates[0], "D").astype(dt.date)
    w0 = windows[0]
    n_back = int(np.ceil(history_years * 12 / w0.step_months))
    back = []
    for j in range(1, n_back + 1):
        s = add_months(w0.start_date, -j * w0.step_months)
        if s < first_obs:
            break
        back.append((s, add_months(s, w0.length_months) - dt.timedelta(days=1)))
    spans = back[::-1] + [(w.start_date, w.end_date) for w in windows]
    es = np.array([window_es(dates, obs, s, e, q, quantile_method) for s, e in spans])
    z = rolling_zscore(es, [s for s, _ in spans], history_years, min_history, on_zero_std)
    n = len(back)
    return ZScoreSeries(
        window_index=np.array([w.index for w in windows]),
        es_value=es[n:],
        zscore=z[n:],
        kind=kind,
    )
