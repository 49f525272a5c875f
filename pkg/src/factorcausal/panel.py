"""Date-aligned daily panels, indicator series and sliding windows."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .exceptions import DataError

__all__ = [
    "ReturnPanel",
    "IndicatorSeries",
    "WindowSpec",
    "load_panel",
    "load_indicator",
    "load_spread",
    "write_panel",
    "align",
    "make_windows",
    "slice_panel",
    "add_months",
]


def _as_dates(dates) -> np.ndarray:
    arr = np.asarray(dates, dtype="datetime64[D]")
    if arr.ndim != 1:
        raise DataError("dates must be one-dimensional")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """N factors observed on T common dates.

    ``values`` has shape (N, T) and holds daily returns as decimal fractions.
    ``n_dropped`` records how many source rows ingestion discarded.
    """

    dates: np.ndarray
    names: tuple
    values: np.ndarray
    n_dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        dates = _as_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        names = tuple(str(n) for n in self.names)
        if values.ndim == 1:
            values = values[None, :]
        if values.shape != (len(names), len(dates)):
            raise DataError(
                f"values shape {values.shape} does not match "
                f"({len(names)} names, {len(dates)} dates)"
            )
        if len(set(names)) != len(names):
            raise DataError("factor names must be unique")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise DataError("dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DataError("panel contains missing or non-finite values")
        object.__setattr__(self, "dates", _freeze(dates))
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "names", names)

    @property
    def n_factors(self) -> int:
        return len(self.names)

    @property
    def n_obs(self) -> int:
        return len(self.dates)

    def to_array(self) -> np.ndarray:
        """Observations as an (n_samples, n_features) array."""
        return np.ascontiguousarray(self.values.T)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values.T, index=pd.DatetimeIndex(self.dates), columns=list(self.names))

    def select(self, names: Sequence[str]) -> "ReturnPanel":
        idx = [self.names.index(n) for n in names]
        return replace(self, names=tuple(names), values=self.values[idx])


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    """Daily open/close levels of an index, or a yield spread stored in both."""

    dates: np.ndarray
    open: np.ndarray
    close: np.ndarray
    name: str = "indicator"

    def __post_init__(self):
        dates = _as_dates(self.dates)
        op = np.asarray(self.open, dtype=float)
        cl = np.asarray(self.close, dtype=float)
        if op.shape != dates.shape or cl.shape != dates.shape:
            raise DataError("open/close must match dates in length")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise DataError("dates must be strictly increasing")
        if not (np.all(np.isfinite(op)) and np.all(np.isfinite(cl))):
            raise DataError("indicator contains non-finite values")
        object.__setattr__(self, "dates", _freeze(dates))
        object.__setattr__(self, "open", _freeze(op))
        object.__setattr__(self, "close", _freeze(cl))

    @classmethod
    def from_levels(cls, dates, levels, name: str = "spread") -> "IndicatorSeries":
        levels = np.asarray(levels, dtype=float)
        return cls(dates, levels, levels, name)


@dataclass(frozen=True)
class WindowSpec:
    index: int
    start_date: dt.date
    end_date: dt.date
    length_months: int = 18
    step_months: int = 3

    def contains(self, dates: np.ndarray) -> np.ndarray:
        d = _as_dates(dates)
        return (d >= np.datetime64(self.start_date, "D")) & (d <= np.datetime64(self.end_date, "D"))

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "start_date": self.start_date.isoformat(),
            "end_date": self.end_date.isoformat(),
            "length_months": self.length_months,
            "step_months": self.step_months,
        }


# ---------------------------------------------------------------- ingestion


def _read_table(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        head = fh.read(4096)
    delimiter = "\t" if head.count("\t") > head.count(",") else ","
    return pd.read_csv(path, sep=delimiter, dtype=str, skipinitialspace=True, keep_default_na=False)


def _parse_dates(raw: pd.Series) -> pd.Series:
    s = raw.astype(str).str.strip()
    compact = s.str.fullmatch(r"\d{8}")
    out = pd.Series(pd.NaT, index=s.index, dtype="datetime64[ns]")
    out[compact] = pd.to_datetime(s[compact], format="%Y%m%d", errors="coerce")
    out[~compact] = pd.to_datetime(s[~compact], format="ISO8601", errors="coerce")
    return out


def _to_float(text: str) -> float:
    # float() parses the shortest repr exactly; pandas' fast parser may not
    try:
        return float(text)
    except ValueError:
        return float("nan")


def _require(df: pd.DataFrame, cols: Sequence[str], path) -> None:
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {missing}; available {list(df.columns)}")


def _numeric_block(df, date_column, value_columns, path):
    _require(df, [date_column, *value_columns], path)
    dates = _parse_dates(df[date_column])
    vals = df[list(value_columns)].apply(lambda c: c.map(_to_float)).astype(float)
    ok = dates.notna() & vals.notna().all(axis=1) & np.isfinite(vals.to_numpy(dtype=float)).all(axis=1)
    dropped = int((~ok).sum())
    frame = vals[ok].copy()
    frame.index = pd.DatetimeIndex(dates[ok]).normalize()
    frame = frame[~frame.index.duplicated(keep="first")].sort_index()
    if frame.empty:
        raise DataError(f"{path}: no usable rows")
    return frame, dropped


def load_panel(path, date_column: str = "date", value_columns: Sequence[str] | None = None,
               scale: float = 1.0) -> ReturnPanel:
    """Read a delimited file of daily returns.

    Comma or tab delimiters are detected from the header. Dates may be ISO-8601
    or YYYYMMDD. Rows with any missing or unparseable cell are dropped and
    counted in ``n_dropped``; values are multiplied by ``scale`` (use 0.01 when
    the source quotes percentages).
    """
    df = _read_table(path)
    if value_columns is None:
        value_columns = [c for c in df.columns if c != date_column]
    frame, dropped = _numeric_block(df, date_column, value_columns, path)
    return ReturnPanel(
        dates=frame.index.values.astype("datetime64[D]"),
        names=tuple(value_columns),
        values=frame.to_numpy(dtype=float).T * scale,
        n_dropped=dropped,
    )


def load_indicator(path, date_column: str = "date", open_column: str = "open",
                   close_column: str = "close", name: str = "VIX") -> IndicatorSeries:
    df = _read_table(path)
    frame, _ = _numeric_block(df, date_column, [open_column, close_column], path)
    return IndicatorSeries(frame.index.values.astype("datetime64[D]"),
                           frame[open_column].to_numpy(), frame[close_column].to_numpy(), name)


def load_spread(path, date_column: str = "date", short_column: str = "3M",
                long_column: str | None = "10Y", name: str = "3M10Y") -> IndicatorSeries:
    """Read yields and form the short-minus-long spread in percentage points.

    With ``long_column=None`` the ``short_column`` is taken to already hold the spread.
    """
    df = _read_table(path)
    cols = [short_column] if long_column is None else [short_column, long_column]
    frame, _ = _numeric_block(df, date_column, cols, path)
    spread = frame[short_column].to_numpy()
    if long_column is not None:
        spread = spread - frame[long_column].to_numpy()
    return IndicatorSeries.from_levels(frame.index.values.astype("datetime64[D]"), spread, name)


def write_panel(panel: ReturnPanel, path, date_column: str = "date", scale: float = 1.0) -> None:
    """Write ``panel`` in the layout :func:`load_panel` reads (values divided by ``scale``)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([date_column, *panel.names])
        for t, d in enumerate(panel.dates):
            w.writerow([str(d), *(repr(float(v) / scale) for v in panel.values[:, t])])


# ---------------------------------------------------------------- alignment


def align(items: Sequence):
    """Restrict panels and indicator series to their common dates.

    Returns a list of the same types, each on the sorted date intersection.
    """
    if not items:
        raise DataError("align needs at least one input")
    common = items[0].dates
    for it in items[1:]:
        common = np.intersect1d(common, it.dates)
    if common.size == 0:
        raise DataError("inputs share no common dates")
    out = []
    for it in items:
        mask = np.isin(it.dates, common)
        if isinstance(it, ReturnPanel):
            out.append(replace(it, dates=it.dates[mask], values=it.values[:, mask]))
        elif isinstance(it, IndicatorSeries):
            out.append(replace(it, dates=it.dates[mask], open=it.open[mask], close=it.close[mask]))
        else:
            raise TypeError(f"cannot align {type(it).__name__}")
    return out


# ---------------------------------------------------------------- windows


def _to_date(d) -> dt.date:
    if isinstance(d, dt.datetime):
        return d.date()
    if isinstance(d, dt.date):
        return d
    return pd.Timestamp(d).date()


def add_months(d: dt.date, months: int) -> dt.date:
    """Calendar month shift, clamping the day to the target month's length."""
    y, m = divmod(d.month - 1 + months, 12)
    year, month = d.year + y, m + 1
    last = (dt.date(year + month // 12, month % 12 + 1, 1) - dt.timedelta(days=1)).day
    return dt.date(year, month, min(d.day, last))


def make_windows(first_date, last_date, length_months: int = 18, step_months: int = 3,
                 month_start: bool = True) -> list[WindowSpec]:
    """Sliding calendar windows of ``length_months`` advancing by ``step_months``.

    With ``month_start`` the grid is anchored on the first day of the month
    containing ``first_date``, so that windows cover whole calendar months.
    A window is kept only if its last day is on or before ``last_date``.
    """
    first, last = _to_date(first_date), _to_date(last_date)
    if not first < last:
        raise DataError("first_date must precede last_date")
    if length_months < 1 or step_months < 1:
        raise DataError("window length and step must be positive")
    anchor = first.replace(day=1) if month_start else first
    windows = []
    k = 0
    while True:
        start = add_months(anchor, k * step_months)
        end = add_months(start, length_months) - dt.timedelta(days=1)
        if end > last:
            break
        windows.append(WindowSpec(k, start, end, length_months, step_months))
        k += 1
    if not windows:
        raise DataError(f"span {first}..{last} is shorter than one {length_months}-month window")
    return windows


def slice_panel(panel: ReturnPanel, window: WindowSpec, min_obs: int = 100) -> ReturnPanel:
    mask = window.contains(panel.dates)
    n = int(mask.sum())
    if n == 0:
        raise DataError(f"window {window.index} covers no panel dates")
    if n < min_obs:
        raise DataError(f"window {window.index} holds {n} observations, fewer than {min_obs}")
    return replace(panel, dates=panel.dates[mask], values=panel.values[:, mask], n_dropped=0)
