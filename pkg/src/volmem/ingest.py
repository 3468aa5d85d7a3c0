"""Tick parsing and one-second grid construction.

Raw trades are aligned to a gapless 1 Hz grid where each second carries the
last trade price at or before it (forward fill). Five-minute windows of
one-second log returns are then cut from the grid; seconds without trades
contribute returns of exactly zero. Seconds before the first observable
price are marked invalid rather than back-filled, and any window touching
an invalid second produces no observation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, SchemaError

NS_PER_S = 1_000_000_000

#: Default tick CSV column mapping: logical name -> header name.
DEFAULT_SCHEMA = {"timestamp": "ts_ns", "price": "price", "size": "size"}

#: Seconds per five-minute interval.
WINDOW_SECONDS = 300


@dataclass
class TickSeries:
    """Raw trades for one instrument, sorted by timestamp."""

    instrument: str
    ts_ns: np.ndarray
    price: np.ndarray
    size: np.ndarray
    rejected_rows: int = 0
    rejected_lines: tuple = ()

    def __len__(self) -> int:
        return int(self.ts_ns.size)


@dataclass
class SecondSeries:
    """Forward-filled 1 Hz price grid with per-second trade aggregates.

    ``prices[i]`` is the last trade price at or before second
    ``start_s + i``; seconds before the first observable price are invalid
    (NaN price, ``valid`` False). ``prev_price`` is the fill price
    prevailing just before ``start_s`` (NaN when no earlier trade exists),
    used as the open of the first window.
    """

    instrument: str
    start_s: int
    prices: np.ndarray
    trade_counts: np.ndarray
    traded_value: np.ndarray
    valid: np.ndarray
    prev_price: float = math.nan

    def __len__(self) -> int:
        return int(self.prices.size)

    @property
    def end_s(self) -> int:
        return self.start_s + len(self)


@dataclass
class ReturnWindow:
    """One five-minute window of one-second log returns.

    ``returns[t]`` is log(p_t / p_{t-1}) for the window's seconds, where the
    price before the first second is the prevailing (forward-filled) price
    entering the interval. ``interval_return`` is log(close/open) with the
    same open convention, so it equals the sum of the returns.
    """

    interval_start: int
    returns: np.ndarray
    active_seconds: int
    interval_return: float
    valid: bool = True
    n: int = field(default=WINDOW_SECONDS)


def parse_ticks(path, schema: dict | None = None, instrument: str | None = None) -> TickSeries:
    """Read a tick CSV into a TickSeries.

    The file must have a header row naming the timestamp, price and size
    columns per ``schema`` (default ``ts_ns,price,size``). Rows with the
    wrong field count, unparseable numbers, non-positive price or negative
    size are rejected and counted, with their line numbers kept (capped).
    Output is sorted by timestamp, stable for equal timestamps so later
    file rows win ties downstream.
    """
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    name = instrument if instrument is not None else str(path)

    ts, px, sz = [], [], []
    rejected = 0
    rejected_lines: list[int] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        try:
            cols = (
                header.index(schema["timestamp"]),
                header.index(schema["price"]),
                header.index(schema["size"]),
            )
        except ValueError:
            raise SchemaError(
                f"{path}: header {header!r} is missing one of "
                f"{sorted(schema.values())!r}"
            ) from None
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                rejected += 1
                if len(rejected_lines) < 20:
                    rejected_lines.append(lineno)
                continue
            try:
                t = int(row[cols[0]])
                p = float(row[cols[1]])
                v = float(row[cols[2]])
            except ValueError:
                rejected += 1
                if len(rejected_lines) < 20:
                    rejected_lines.append(lineno)
                continue
            if not (p > 0.0) or not (v >= 0.0) or not math.isfinite(p) or not math.isfinite(v):
                rejected += 1
                if len(rejected_lines) < 20:
                    rejected_lines.append(lineno)
                continue
            ts.append(t)
            px.append(p)
            sz.append(v)

    if not ts:
        raise SchemaError(f"{path}: no valid rows ({rejected} rejected)")

    ts_a = np.asarray(ts, dtype=np.int64)
    order = np.argsort(ts_a, kind="stable")
    return TickSeries(
        instrument=name,
        ts_ns=ts_a[order],
        price=np.asarray(px, dtype=np.float64)[order],
        size=np.asarray(sz, dtype=np.float64)[order],
        rejected_rows=rejected,
        rejected_lines=tuple(rejected_lines),
    )


def align_to_grid(ticks: TickSeries, start_s: int, end_s: int) -> SecondSeries:
    """Align trades to a gapless 1 Hz grid over [start_s, end_s).

    Second s carries the last trade price at time <= s (trades inside
    [s, s+1) belong to s, later file order winning within a second).
    Ticks before ``start_s`` seed the fill; with no seed and no trade yet,
    leading seconds are invalid.
    """
    if not (start_s < end_s):
        raise DataError(f"grid start {start_s} must precede end {end_s}")
    n = int(end_s - start_s)
    sec = ticks.ts_ns // NS_PER_S
    idx = (sec - start_s).astype(np.int64)
    in_range = (idx >= 0) & (idx < n)

    counts = np.bincount(idx[in_range], minlength=n).astype(np.int64)
    value = np.bincount(idx[in_range], weights=ticks.size[in_range], minlength=n)

    prices = np.full(n, np.nan)
    if in_range.any():
        ii = idx[in_range]
        pp = ticks.price[in_range]
        # last occurrence per second: first occurrence in the reversed array
        rev = ii[::-1]
        uniq, first_rev = np.unique(rev, return_index=True)
        prices[uniq] = pp[::-1][first_rev]

    before = idx < 0
    prev_price = float(ticks.price[before][-1]) if before.any() else math.nan

    known = ~np.isnan(prices)
    if known.any():
        pos = np.where(known, np.arange(n), -1)
        np.maximum.accumulate(pos, out=pos)
        filled = np.where(pos >= 0, prices[np.maximum(pos, 0)], np.nan)
    else:
        filled = prices
    if math.isfinite(prev_price):
        lead = np.isnan(filled)
        filled[lead] = prev_price

    return SecondSeries(
        instrument=ticks.instrument,
        start_s=int(start_s),
        prices=filled,
        trade_counts=counts,
        traded_value=value,
        valid=~np.isnan(filled),
        prev_price=prev_price,
    )


def window_returns(series: SecondSeries, interval_start: int, n: int = WINDOW_SECONDS) -> ReturnWindow:
    """Cut the n-second return window starting at ``interval_start``.

    The open is the forward-filled price prevailing when the interval
    begins (the second before it, or the grid seed for the first window),
    so the first return already reflects any trade in the first second and
    the returns sum to log(close/open). A window overlapping invalid
    seconds is returned with ``valid`` False.
    """
    s0 = int(interval_start - series.start_s)
    if s0 < 0 or s0 + n > len(series):
        raise DataError(
            f"interval [{interval_start}, {interval_start + n}) not covered by grid "
            f"[{series.start_s}, {series.end_s})"
        )
    if s0 >= 1:
        open_price = float(series.prices[s0 - 1])
    else:
        open_price = series.prev_price

    path = series.prices[s0 : s0 + n]
    ok = bool(series.valid[s0 : s0 + n].all()) and math.isfinite(open_price)
    if not ok:
        return ReturnWindow(
            interval_start=int(interval_start),
            returns=np.zeros(n),
            active_seconds=0,
            interval_return=math.nan,
            valid=False,
            n=n,
        )

    prev = np.empty(n)
    prev[0] = open_price
    prev[1:] = path[:-1]
    # identical floats difference to exactly 0.0 for untraded (filled) seconds
    returns = np.log(path) - np.log(prev)
    active = int(np.count_nonzero(series.trade_counts[s0 : s0 + n]))
    interval_return = float(math.log(path[-1]) - math.log(open_price))
    return ReturnWindow(
        interval_start=int(interval_start),
        returns=returns,
        active_seconds=active,
        interval_return=interval_return,
        valid=True,
        n=n,
    )


def interval_starts(series: SecondSeries, window: int = WINDOW_SECONDS) -> list[int]:
    """Interval start seconds fully covered by the grid, aligned to UTC
    ``window`` boundaries."""
    first = series.start_s + (-series.start_s) % window
    out = []
    s = first
    while s + window <= series.end_s:
        out.append(int(s))
        s += window
    return out


def window_volume(series: SecondSeries, interval_start: int, n: int = WINDOW_SECONDS) -> float:
    """Summed traded value (quote currency) over one interval."""
    s0 = int(interval_start - series.start_s)
    if s0 < 0 or s0 + n > len(series):
        raise DataError("interval not covered by grid")
    return float(series.traded_value[s0 : s0 + n].sum())


def write_ticks_csv(path, ticks: TickSeries) -> None:
    """Write a TickSeries in the canonical ``ts_ns,price,size`` schema."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ts_ns", "price", "size"])
        for t, p, v in zip(ticks.ts_ns, ticks.price, ticks.size):
            w.writerow([int(t), repr(float(p)), repr(float(v))])
