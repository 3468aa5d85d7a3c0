"""Tick parsing, grid alignment, and window extraction."""
import math

import numpy as np
import pytest

from helpers import ticks_from_arrays, write_tick_csv
from volmem import ingest
from volmem.errors import DataError, SchemaError

NS = ingest.NS_PER_S


def test_parse_keeps_all_valid_rows_sorted(tmp_path):
    path = write_tick_csv(tmp_path / "t.csv", [
        (2 * NS, "101.0", "0.5"),
        (0, "100.0", "1.0"),
        (1 * NS, "100.5", "2.0"),
    ])
    ticks = ingest.parse_ticks(path)
    assert len(ticks) == 3
    assert ticks.rejected_rows == 0
    assert list(ticks.ts_ns) == [0, NS, 2 * NS]
    assert list(ticks.price) == [100.0, 100.5, 101.0]
    assert list(ticks.size) == [1.0, 2.0, 0.5]


def test_parse_sort_is_stable_within_a_timestamp(tmp_path):
    # two trades in the same nanosecond: file order must survive the sort
    path = write_tick_csv(tmp_path / "t.csv", [
        (5 * NS, "100.0", "1"),
        (5 * NS, "101.0", "1"),
        (4 * NS, "99.0", "1"),
    ])
    ticks = ingest.parse_ticks(path)
    assert list(ticks.price) == [99.0, 100.0, 101.0]


def test_parse_rejects_bad_rows_with_line_numbers(tmp_path):
    path = write_tick_csv(tmp_path / "t.csv", [
        (0, "100.0", "1.0"),
        (1 * NS, "-1", "1.0"),       # non-positive price
        (2 * NS, "100.0", "-5"),     # negative size
        (3 * NS, "abc", "1.0"),      # unparseable
        (4 * NS, "101.0", "1.0"),
    ])
    ticks = ingest.parse_ticks(path)
    assert len(ticks) == 2
    assert ticks.rejected_rows == 3
    # 1-based file lines, header on line 1
    assert ticks.rejected_lines == (3, 4, 5)


def test_parse_missing_column_raises(tmp_path):
    path = write_tick_csv(tmp_path / "t.csv", [(0, "1")], header=("ts_ns", "price"))
    with pytest.raises(SchemaError, match="size"):
        ingest.parse_ticks(path)


def test_parse_no_valid_rows_raises(tmp_path):
    path = write_tick_csv(tmp_path / "t.csv", [(0, "-1", "1.0")])
    with pytest.raises(SchemaError, match="no valid rows"):
        ingest.parse_ticks(path)


def test_parse_custom_schema(tmp_path):
    path = write_tick_csv(tmp_path / "t.csv", [(0, "100.0", "2.0")],
                          header=("when", "px", "qty"))
    ticks = ingest.parse_ticks(
        path, schema={"timestamp": "when", "price": "px", "size": "qty"},
        instrument="ZZZ")
    assert ticks.instrument == "ZZZ"
    assert list(ticks.price) == [100.0]
    assert list(ticks.size) == [2.0]


def test_align_forward_fills_between_trades():
    ticks = ticks_from_arrays([0, 2], [100.0, 101.0])
    grid = ingest.align_to_grid(ticks, 0, 4)
    assert list(grid.prices) == [100.0, 100.0, 101.0, 101.0]
    assert list(grid.trade_counts) == [1, 0, 1, 0]
    assert grid.valid.all()


def test_align_without_seed_marks_leading_seconds_invalid():
    ticks = ticks_from_arrays([2], [101.0])
    grid = ingest.align_to_grid(ticks, 0, 4)
    assert list(grid.valid) == [False, False, True, True]
    assert math.isnan(grid.prev_price)


def test_align_seeds_from_earlier_trades():
    ticks = ticks_from_arrays([0, 302], [100.0, 101.0])
    grid = ingest.align_to_grid(ticks, 300, 600)
    assert grid.prev_price == 100.0
    assert grid.valid.all()
    assert grid.prices[0] == 100.0   # forward-filled before the window's trade
    assert grid.prices[2] == 101.0


def test_align_aggregates_per_second():
    ticks = ingest.TickSeries(
        "X",
        np.array([100_000_000, 400_000_000, 900_000_000], dtype=np.int64),
        np.array([100.0, 101.0, 102.0]),
        np.array([1.0, 2.0, 3.0]),
    )
    grid = ingest.align_to_grid(ticks, 0, 1)
    assert grid.trade_counts[0] == 3
    assert grid.prices[0] == 102.0   # last trade in the second wins
    # sizes are quote-denominated, so traded value is their plain sum
    assert grid.traded_value[0] == pytest.approx(1.0 + 2.0 + 3.0, rel=1e-15)


def test_window_returns_start_of_window():
    # prior price 100, no trade in second 0, trade at second 1
    ticks = ticks_from_arrays([0, 301], [100.0, 101.0])
    grid = ingest.align_to_grid(ticks, 300, 600)
    w = ingest.window_returns(grid, 300, n=4)
    assert w.valid
    assert w.returns[0] == 0.0
    assert w.returns[1] == pytest.approx(math.log(101.0 / 100.0), rel=1e-15)
    assert w.returns[2] == 0.0
    assert w.active_seconds == 1


def test_window_untraded_interval_is_flat():
    ticks = ticks_from_arrays([0], [100.0])
    grid = ingest.align_to_grid(ticks, 300, 600)
    w = ingest.window_returns(grid, 300)
    assert w.valid
    assert w.active_seconds == 0
    assert not w.returns.any()
    assert w.interval_return == 0.0


def test_window_invalid_before_first_trade():
    ticks = ticks_from_arrays([500], [100.0])
    grid = ingest.align_to_grid(ticks, 0, 600)
    w = ingest.window_returns(grid, 0)
    assert not w.valid


def test_window_active_second_count():
    rng = np.random.default_rng(7)
    secs = np.sort(rng.choice(np.arange(300), size=59, replace=False))
    ticks = ticks_from_arrays(np.concatenate([[0], 300 + secs]),
                              np.full(60, 100.0))
    grid = ingest.align_to_grid(ticks, 300, 600)
    w = ingest.window_returns(grid, 300)
    assert w.active_seconds == 59
    assert w.active_seconds / w.n == pytest.approx(0.1967, abs=5e-4)


def test_interval_return_equals_return_sum():
    rng = np.random.default_rng(1)
    prices = 100.0 * np.exp(np.cumsum(0.001 * rng.standard_normal(301)))
    ticks = ticks_from_arrays(np.arange(301), prices)
    grid = ingest.align_to_grid(ticks, 1, 301)
    w = ingest.window_returns(grid, 1, n=300)
    assert w.interval_return == pytest.approx(
        math.log(prices[-1] / prices[0]), rel=1e-12)
    assert abs(w.returns.sum() - w.interval_return) < 1e-12


def test_price_path_reconstruction():
    rng = np.random.default_rng(2)
    secs = np.sort(rng.choice(np.arange(300, 600), size=80, replace=False))
    prices = 100.0 * np.exp(np.cumsum(0.002 * rng.standard_normal(81)))
    ticks = ticks_from_arrays(np.concatenate([[5], secs]), prices)
    grid = ingest.align_to_grid(ticks, 0, 600)
    w = ingest.window_returns(grid, 300)
    open_price = grid.prices[299]
    rebuilt = open_price * np.exp(np.cumsum(w.returns))
    np.testing.assert_allclose(rebuilt, grid.prices[300:600], rtol=1e-12)


def test_fill_idempotence():
    rng = np.random.default_rng(3)
    prices = 100.0 + rng.random(300)
    ticks = ticks_from_arrays(np.arange(300), prices)
    once = ingest.align_to_grid(ticks, 0, 300)
    again = ingest.align_to_grid(
        ticks_from_arrays(np.arange(300), once.prices), 0, 300)
    np.testing.assert_array_equal(once.prices, again.prices)


def test_interval_starts_covers_full_windows_only():
    ticks = ticks_from_arrays([600], [100.0])
    grid = ingest.align_to_grid(ticks, 600, 1500)
    assert ingest.interval_starts(grid) == [600, 900, 1200]
    short = ingest.align_to_grid(ticks, 600, 1400)
    assert ingest.interval_starts(short) == [600, 900]


def test_window_volume_sums_traded_value():
    ticks = ingest.TickSeries(
        "X",
        np.array([0, 150 * NS, 420 * NS], dtype=np.int64),
        np.array([100.0, 101.0, 102.0]),
        np.array([1.0, 2.0, 4.0]),
    )
    grid = ingest.align_to_grid(ticks, 0, 600)
    # sizes carry the quote-currency value directly
    assert ingest.window_volume(grid, 0) == pytest.approx(1.0 + 2.0, rel=1e-15)
    assert ingest.window_volume(grid, 300) == pytest.approx(4.0, rel=1e-15)


def test_tick_csv_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    ts = np.sort(rng.integers(0, 10**12, size=50))
    ticks = ingest.TickSeries("R", ts.astype(np.int64),
                              100 + rng.random(50), rng.random(50) + 0.1)
    path = tmp_path / "round.csv"
    ingest.write_ticks_csv(path, ticks)
    back = ingest.parse_ticks(path, instrument="R")
    np.testing.assert_array_equal(back.ts_ns, ticks.ts_ns)
    np.testing.assert_allclose(back.price, ticks.price, rtol=0, atol=0)
    np.testing.assert_allclose(back.size, ticks.size, rtol=0, atol=0)


def test_window_outside_grid_raises():
    ticks = ticks_from_arrays([0], [100.0])
    grid = ingest.align_to_grid(ticks, 0, 300)
    with pytest.raises(DataError):
        ingest.window_returns(grid, 300)
