import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factorcausal.exceptions import DataError
from factorcausal.panel import (IndicatorSeries, ReturnPanel, add_months, align, load_indicator,
                                load_panel, load_spread, make_windows, slice_panel, write_panel)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_panel_comma_iso(tmp_path):
    p = _write(tmp_path, "f.csv", "date,A,B\n2020-01-02,1.0,2.0\n2020-01-03,-0.5,0.25\n")
    panel = load_panel(p, scale=0.01)
    assert panel.names == ("A", "B")
    assert panel.n_obs == 2
    np.testing.assert_allclose(panel.values, [[0.01, -0.005], [0.02, 0.0025]])


def test_load_panel_tab_compact_dates(tmp_path):
    p = _write(tmp_path, "f.tsv", "date\tMkt-RF\tSMB\n19910102\t0.5\t0.1\n19910103\t-0.2\t0.3\n")
    panel = load_panel(p)
    assert panel.names == ("Mkt-RF", "SMB")
    assert panel.dates[0] == np.datetime64("1991-01-02")


def test_load_panel_drops_and_counts_bad_rows(tmp_path):
    p = _write(tmp_path, "f.csv",
               "date,A\n2020-01-02,1\nnot-a-date,2\n2020-01-06,\n2020-01-07,x\n2020-01-08,3\n")
    panel = load_panel(p)
    assert panel.n_dropped == 3
    np.testing.assert_array_equal(panel.values[0], [1.0, 3.0])


def test_load_panel_sorts_dates(tmp_path):
    p = _write(tmp_path, "f.csv", "date,A\n2020-01-03,2\n2020-01-02,1\n")
    np.testing.assert_array_equal(load_panel(p).values[0], [1.0, 2.0])


def test_load_panel_missing_column(tmp_path):
    p = _write(tmp_path, "f.csv", "day,A\n2020-01-02,1\n")
    with pytest.raises(DataError, match="missing column"):
        load_panel(p)


def test_load_panel_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_panel(tmp_path / "nope.csv")


def test_write_panel_round_trip(tmp_path, chain_panel):
    panel, _ = chain_panel
    write_panel(panel, tmp_path / "p.csv")
    back = load_panel(tmp_path / "p.csv")
    assert back.names == panel.names
    np.testing.assert_array_equal(back.dates, panel.dates)
    np.testing.assert_array_equal(back.values, panel.values)
    write_panel(panel, tmp_path / "q.csv", scale=0.01)
    np.testing.assert_allclose(load_panel(tmp_path / "q.csv", scale=0.01).values, panel.values,
                               rtol=1e-12)


def test_spread_is_short_minus_long(tmp_path):
    p = _write(tmp_path, "y.csv", "date,3M,10Y\n2020-01-02,1.5,1.9\n2020-01-03,1.6,1.8\n")
    s = load_spread(p)
    np.testing.assert_allclose(s.close, [-0.4, -0.2])


def test_load_indicator(tmp_path):
    p = _write(tmp_path, "v.csv", "date,open,close\n2020-01-02,12,13\n")
    v = load_indicator(p)
    assert v.open[0] == 12 and v.close[0] == 13


def test_panel_validation():
    d = np.array(["2020-01-02", "2020-01-03"], dtype="datetime64[D]")
    with pytest.raises(DataError, match="shape"):
        ReturnPanel(d, ("a",), np.zeros((2, 2)))
    with pytest.raises(DataError, match="increasing"):
        ReturnPanel(d[::-1], ("a",), np.zeros((1, 2)))
    with pytest.raises(DataError, match="non-finite"):
        ReturnPanel(d, ("a",), np.array([[0.0, np.nan]]))
    with pytest.raises(DataError, match="unique"):
        ReturnPanel(d, ("a", "a"), np.zeros((2, 2)))


def test_panel_is_read_only(chain_panel):
    panel, _ = chain_panel
    with pytest.raises(ValueError):
        panel.values[0, 0] = 1.0


def test_align_intersects_dates():
    d1 = np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-06"))
    d2 = d1[2:]
    p = ReturnPanel(d1, ("a",), np.arange(5.0))
    v = IndicatorSeries(d2, np.ones(3), np.ones(3))
    a, b = align([p, v])
    np.testing.assert_array_equal(a.dates, d2)
    np.testing.assert_array_equal(a.values[0], [2.0, 3.0, 4.0])
    assert b.dates.size == 3


def test_align_disjoint_raises():
    p = ReturnPanel(np.array(["2020-01-01"], "datetime64[D]"), ("a",), [[1.0]])
    q = ReturnPanel(np.array(["2021-01-01"], "datetime64[D]"), ("a",), [[1.0]])
    with pytest.raises(DataError):
        align([p, q])


def test_add_months_clamps_day():
    assert add_months(dt.date(2020, 1, 31), 1) == dt.date(2020, 2, 29)
    assert add_months(dt.date(2019, 11, 30), 3) == dt.date(2020, 2, 29)
    assert add_months(dt.date(2020, 3, 15), -15) == dt.date(2018, 12, 15)


def test_windows_24_month_span():
    w = make_windows(dt.date(2000, 1, 1), dt.date(2001, 12, 31), 18, 3)
    assert len(w) == 3
    assert (w[0].start_date, w[0].end_date) == (dt.date(2000, 1, 1), dt.date(2001, 6, 30))
    assert (w[2].start_date, w[2].end_date) == (dt.date(2000, 7, 1), dt.date(2001, 12, 31))


def test_windows_full_sample_count():
    # 1991-01-02 .. 2019-12-31 with 18-month windows stepping 3 months
    assert len(make_windows("1991-01-02", "2019-12-31")) == 111
    # anchoring on the first observation loses the final window
    assert len(make_windows("1991-01-02", "2019-12-31", month_start=False)) == 110


def test_windows_too_short():
    with pytest.raises(DataError):
        make_windows("2000-01-01", "2001-01-01", 18, 3)


def test_slice_panel_min_obs(chain_panel):
    panel, _ = chain_panel
    w = make_windows(panel.dates[0], panel.dates[-1], 6, 3)[0]
    sl = slice_panel(panel, w)
    assert sl.dates[0] >= np.datetime64(w.start_date) and sl.dates[-1] <= np.datetime64(w.end_date)
    with pytest.raises(DataError, match="fewer than"):
        slice_panel(panel, w, min_obs=10_000)


@settings(max_examples=60, deadline=None)
@given(start=st.dates(dt.date(1950, 1, 1), dt.date(2030, 1, 1)),
       span_days=st.integers(400, 6000),
       length=st.integers(1, 36), step=st.integers(1, 12))
def test_window_grid_invariants(start, span_days, length, step):
    end = start + dt.timedelta(days=span_days)
    try:
        ws = make_windows(start, end, length, step)
    except DataError:
        return
    for k, w in enumerate(ws):
        assert w.index == k
        assert w.end_date <= end
        assert w.start_date.day == 1
        assert add_months(w.start_date, length) - dt.timedelta(days=1) == w.end_date
        if k:
            assert add_months(ws[k - 1].start_date, step) == w.start_date
    # the next window would overrun the data
    assert add_months(add_months(ws[-1].start_date, step), length) - dt.timedelta(days=1) > end
