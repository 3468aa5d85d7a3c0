"""Diurnal adjustment, winsorization and panel assembly.

Realised volatility and volume carry a strong deterministic intraday
pattern. Each observation is divided by its five-minute slot's full-sample
average (288 slots per UTC day), extremes are clipped at a high quantile,
and per-instrument series are joined on shared timestamps into a panel
with zero masks, negative-return masks and trading-zone labels.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import ingest, rvol
from .errors import DataError, SchemaError

log = logging.getLogger(__name__)

SLOTS_PER_DAY = 288
SLOT_SECONDS = 300
FLOOR = 1e-12

ZONES = ("AS", "EU", "US")

PANEL_SCHEMA_VERSION = 1


def slot_of(times) -> np.ndarray:
    """Five-minute slot of the UTC day (0..287) for epoch-second times."""
    t = np.asarray(times, dtype=np.int64)
    return (t % 86_400) // SLOT_SECONDS


def zone_of(times) -> np.ndarray:
    """Trading zone by interval start: AS [00,08), EU [08,16), US [16,24) UTC."""
    t = np.asarray(times, dtype=np.int64)
    idx = (t % 86_400) // 28_800
    return np.asarray(ZONES, dtype=object)[idx]


@dataclass
class IntervalSeries:
    """Per-instrument five-minute observations (realised vol or volume)."""

    instrument: str
    times: np.ndarray        # epoch seconds, interval starts
    values: np.ndarray       # >= 0
    zeroed: np.ndarray       # True where the activity threshold zeroed the value
    neg_return: np.ndarray   # True where the interval price return was negative

    def __len__(self) -> int:
        return int(self.times.size)

    def slots(self) -> np.ndarray:
        return slot_of(self.times)


@dataclass
class DiurnalProfile:
    """Per-slot scale factors over the full sample."""

    factors: np.ndarray      # length 288, > 0 (floored)
    statistic: str           # "mean" or "median"
    floored_slots: tuple = ()


@dataclass
class Panel:
    """Time-aligned T x K matrix of adjusted observations."""

    instruments: tuple
    times: np.ndarray
    values: np.ndarray       # (T, K)
    zero_mask: np.ndarray    # (T, K) bool
    neg_mask: np.ndarray     # (T, K) bool
    dropped_rows: int = 0

    @property
    def T(self) -> int:
        return int(self.times.size)

    @property
    def K(self) -> int:
        return len(self.instruments)

    def zone_labels(self) -> np.ndarray:
        return zone_of(self.times)

    def zone_indicators(self) -> np.ndarray:
        """(T, 3) one-hot columns for AS, EU, US; rows sum to 1."""
        labels = self.zone_labels()
        out = np.zeros((self.T, 3))
        for j, z in enumerate(ZONES):
            out[:, j] = labels == z
        return out

    def column(self, instrument: str) -> int:
        try:
            return self.instruments.index(instrument)
        except ValueError:
            raise DataError(f"unknown instrument {instrument!r}; panel has {self.instruments}") from None


def rv_series(second_series: ingest.SecondSeries, cfg: rvol.RvConfig | None = None) -> IntervalSeries:
    """Realised-volatility series over every fully covered interval of a grid.

    Windows overlapping invalid leading seconds produce no observation.
    """
    cfg = cfg or rvol.RvConfig()
    times, vals, zeroed, neg = [], [], [], []
    for start in ingest.interval_starts(second_series, cfg.window_seconds):
        window = ingest.window_returns(second_series, start, cfg.window_seconds)
        obs = rvol.estimate(window, cfg)
        if obs is None:
            continue
        times.append(start)
        vals.append(obs.value)
        zeroed.append(obs.is_zeroed)
        neg.append(obs.interval_return_negative)
    return IntervalSeries(
        instrument=second_series.instrument,
        times=np.asarray(times, dtype=np.int64),
        values=np.asarray(vals, dtype=np.float64),
        zeroed=np.asarray(zeroed, dtype=bool),
        neg_return=np.asarray(neg, dtype=bool),
    )


def volume_series(second_series: ingest.SecondSeries, window: int = ingest.WINDOW_SECONDS) -> IntervalSeries:
    """Per-interval traded value (quote currency) with the price-return sign
    flags of the same instrument's intervals."""
    times, vals, neg = [], [], []
    for start in ingest.interval_starts(second_series, window):
        w = ingest.window_returns(second_series, start, window)
        if not w.valid:
            continue
        times.append(start)
        vals.append(ingest.window_volume(second_series, start, window))
        neg.append(w.interval_return < 0.0)
    vals_a = np.asarray(vals, dtype=np.float64)
    return IntervalSeries(
        instrument=second_series.instrument,
        times=np.asarray(times, dtype=np.int64),
        values=vals_a,
        zeroed=np.zeros(len(vals), dtype=bool),
        neg_return=np.asarray(neg, dtype=bool),
    )


def diurnal_factors(series: IntervalSeries, statistic: str = "mean") -> DiurnalProfile:
    """Full-sample per-slot factors (mean for volatility, median offered for
    volume profiles).

    Every slot needs at least one observation. A slot whose statistic is
    not strictly positive (all zeros) is floored at 1e-12 and flagged, so
    division never blows up while zeros stay zeros.
    """
    if statistic not in ("mean", "median"):
        raise DataError(f"statistic must be 'mean' or 'median', got {statistic!r}")
    slots = series.slots()
    factors = np.empty(SLOTS_PER_DAY)
    floored = []
    stat = np.mean if statistic == "mean" else np.median
    for k in range(SLOTS_PER_DAY):
        vals = series.values[slots == k]
        if vals.size == 0:
            raise DataError(f"slot {k} has no observations; cannot build a diurnal profile")
        f = float(stat(vals))
        if f <= 0.0:
            floored.append(k)
            f = FLOOR
        factors[k] = f
    if floored:
        log.warning("diurnal profile for %s: %d slot(s) floored at %g: %s",
                    series.instrument, len(floored), FLOOR, floored[:10])
    return DiurnalProfile(factors=factors, statistic=statistic, floored_slots=tuple(floored))


def diurnal_adjust(series: IntervalSeries, profile: DiurnalProfile) -> IntervalSeries:
    """Divide each value by its slot factor; zeros remain exactly zero."""
    if profile.factors.size != SLOTS_PER_DAY:
        raise DataError("profile must cover all 288 slots")
    adj = series.values / profile.factors[series.slots()]
    adj[series.values == 0.0] = 0.0
    return IntervalSeries(
        instrument=series.instrument,
        times=series.times.copy(),
        values=adj,
        zeroed=series.zeroed.copy(),
        neg_return=series.neg_return.copy(),
    )


def winsorize_top(values, tail: float = 0.0005):
    """Clip values above the nearest-rank (1 - tail) quantile.

    The cutoff is the sorted value at rank ceil((1-tail)*N) (1-indexed);
    everything strictly above it is set to it. Returns (clipped array,
    number of clipped values).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DataError("cannot winsorize an empty series")
    if tail <= 0.0:
        return v.copy(), 0
    rank = math.ceil((1.0 - tail) * v.size)
    rank = min(max(rank, 1), v.size)
    q = np.sort(v, kind="stable")[rank - 1]
    clipped = int(np.count_nonzero(v > q))
    return np.minimum(v, q), clipped


def winsorize_series(series: IntervalSeries, tail: float = 0.0005) -> IntervalSeries:
    out, clipped = winsorize_top(series.values, tail)
    if clipped:
        log.info("winsorized %d value(s) of %s", clipped, series.instrument)
    return IntervalSeries(
        instrument=series.instrument,
        times=series.times.copy(),
        values=out,
        zeroed=series.zeroed.copy(),
        neg_return=series.neg_return.copy(),
    )


def build_panel(series: list[IntervalSeries]) -> Panel:
    """Join per-instrument series on the intersection of their timestamps.

    Rows missing for any instrument are dropped and counted.
    """
    if not series:
        raise DataError("no series given")
    names = tuple(s.instrument for s in series)
    if len(set(names)) != len(names):
        raise DataError(f"instrument names must be unique, got {names}")
    common = series[0].times
    for s in series[1:]:
        common = np.intersect1d(common, s.times)
    if common.size == 0:
        raise DataError("timestamp intersection across instruments is empty")
    union = np.unique(np.concatenate([s.times for s in series])).size
    dropped = union - common.size

    T, K = common.size, len(series)
    values = np.empty((T, K))
    neg = np.zeros((T, K), dtype=bool)
    for j, s in enumerate(series):
        pos = np.searchsorted(s.times, common)
        values[:, j] = s.values[pos]
        neg[:, j] = s.neg_return[pos]
    return Panel(
        instruments=names,
        times=common.astype(np.int64),
        values=values,
        zero_mask=values == 0.0,
        neg_mask=neg,
        dropped_rows=int(dropped),
    )


# ---------------------------------------------------------------------------
# persistence: long CSV and compact columnar JSON, round-trip tested

def write_panel_csv(path, panel: Panel) -> None:
    zones = panel.zone_labels()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "instrument", "value", "zero", "neg_return", "zone"])
        for i in range(panel.T):
            for j, inst in enumerate(panel.instruments):
                w.writerow([
                    int(panel.times[i]),
                    inst,
                    repr(float(panel.values[i, j])),
                    int(panel.zero_mask[i, j]),
                    int(panel.neg_mask[i, j]),
                    zones[i],
                ])


def read_panel_csv(path) -> Panel:
    rows: dict[str, list] = {}
    times_seen: list[int] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "instrument", "value", "zero", "neg_return", "zone"]:
            raise SchemaError(f"{path}: unexpected panel header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise SchemaError(f"{path}: line {lineno}: expected 6 fields, got {len(row)}")
            try:
                t = int(row[0]); v = float(row[2]); z = bool(int(row[3])); ng = bool(int(row[4]))
            except ValueError as e:
                raise SchemaError(f"{path}: line {lineno}: {e}") from None
            inst = row[1]
            rows.setdefault(inst, []).append((t, v, z, ng))
            times_seen.append(t)
    if not rows:
        raise SchemaError(f"{path}: no panel rows")
    series = []
    for inst, recs in rows.items():
        recs.sort(key=lambda r: r[0])
        series.append(IntervalSeries(
            instrument=inst,
            times=np.asarray([r[0] for r in recs], dtype=np.int64),
            values=np.asarray([r[1] for r in recs]),
            zeroed=np.asarray([r[2] for r in recs], dtype=bool),
            neg_return=np.asarray([r[3] for r in recs], dtype=bool),
        ))
    return build_panel(series)


def panel_to_dict(panel: Panel) -> dict:
    return {
        "schema_version": PANEL_SCHEMA_VERSION,
        "instruments": list(panel.instruments),
        "times": [int(t) for t in panel.times],
        "values": {inst: [float(v) for v in panel.values[:, j]]
                   for j, inst in enumerate(panel.instruments)},
        "neg_return": {inst: [int(b) for b in panel.neg_mask[:, j]]
                       for j, inst in enumerate(panel.instruments)},
        "zones": [str(z) for z in panel.zone_labels()],
        "dropped_rows": int(panel.dropped_rows),
    }


def panel_from_dict(d: dict) -> Panel:
    if d.get("schema_version") != PANEL_SCHEMA_VERSION:
        raise SchemaError(f"unsupported panel schema_version {d.get('schema_version')!r}")
    instruments = tuple(d["instruments"])
    times = np.asarray(d["times"], dtype=np.int64)
    values = np.column_stack([np.asarray(d["values"][i], dtype=np.float64) for i in instruments])
    neg = np.column_stack([np.asarray(d["neg_return"][i], dtype=bool) for i in instruments])
    return Panel(
        instruments=instruments,
        times=times,
        values=values,
        zero_mask=values == 0.0,
        neg_mask=neg,
        dropped_rows=int(d.get("dropped_rows", 0)),
    )


def write_panel_json(path, panel: Panel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(panel_to_dict(panel), fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_panel_json(path) -> Panel:
    with open(path, "r", encoding="utf-8") as fh:
        return panel_from_dict(json.load(fh))
