"""Machine-readable exports feeding the figure renderer.

Schemas are frozen and versioned; the renderer consumes only these
files, never library objects:

    flowgraph.json          {"schema_version": 1, "nodes": [...],
                             "edges": [{source, target, weight, sign}],
                             "self_loops": [{node, weight}],
                             "significance_level": ...}
    profile_<name>.csv      slot,utc,value        (288 rows)
    hist_<name>.csv         bin_left,bin_right,count_before,count_after
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError
from .prep import SLOTS_PER_DAY
from .vmem import VFitResult

FLOWGRAPH_SCHEMA_VERSION = 1
PROFILE_HEADER = ("slot", "utc", "value")
HIST_HEADER = ("bin_left", "bin_right", "count_before", "count_after")


@dataclass(frozen=True)
class FlowGraph:
    """Directed transmission graph of significant lag-1 entries.

    Edges carry off-diagonal entries (source column sends to target
    row); significant diagonal entries are separated out as per-node
    self-persistence.
    """

    nodes: tuple
    edges: tuple          # dicts: source, target, weight, sign
    self_loops: tuple     # dicts: node, weight
    significance_level: float

    def to_dict(self) -> dict:
        return {
            "schema_version": FLOWGRAPH_SCHEMA_VERSION,
            "nodes": list(self.nodes),
            "edges": [dict(e) for e in self.edges],
            "self_loops": [dict(s) for s in self.self_loops],
            "significance_level": self.significance_level,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def export_flow_graph(fit: VFitResult, level: float | None = None) -> FlowGraph:
    """Flow graph of the lag-1 matrix at a significance level.

    One edge per significant off-diagonal entry, ordered by (source,
    target) column-major in instrument order; diagonal entries become
    self-loops. Entry counts are exact: len(edges) equals the number of
    significant off-diagonal coefficients.
    """
    level = fit.significance_level if level is None else level
    A1 = fit.params.A_lags[0]
    pv = fit.pv_A_lags[0]
    names = fit.instruments
    K = len(names)
    edges = []
    loops = []
    for src in range(K):
        for tgt in range(K):
            p = pv[tgt, src]
            if not (p < level):
                continue
            wgt = float(A1[tgt, src])
            if src == tgt:
                loops.append({"node": names[src], "weight": wgt})
            else:
                edges.append(
                    {
                        "source": names[src],
                        "target": names[tgt],
                        "weight": wgt,
                        "sign": 1 if wgt >= 0.0 else -1,
                    }
                )
    return FlowGraph(
        nodes=tuple(names),
        edges=tuple(edges),
        self_loops=tuple(loops),
        significance_level=float(level),
    )


@dataclass(frozen=True)
class ProfileTable:
    """Per-slot intraday statistic, one value per five-minute slot."""

    instrument: str
    statistic: str
    values: np.ndarray    # (288,)

    @staticmethod
    def label(slot: int) -> str:
        return f"{slot // 12:02d}:{(slot % 12) * 5:02d}"


def intraday_profile(series, statistic: str = "mean") -> ProfileTable:
    """Collapse a series onto the 288 daily slots with a mean or median.

    Every slot must be observed at least once; an empty slot is an
    error naming the slot.
    """
    if statistic not in ("mean", "median"):
        raise DataError(f"statistic must be 'mean' or 'median', got {statistic!r}")
    slots = series.slots()
    values = np.asarray(series.values, dtype=np.float64)
    out = np.zeros(SLOTS_PER_DAY)
    op = np.mean if statistic == "mean" else np.median
    for s in range(SLOTS_PER_DAY):
        mask = slots == s
        if not mask.any():
            raise DataError(f"slot {s} ({ProfileTable.label(s)}) has no observations")
        out[s] = op(values[mask])
    return ProfileTable(instrument=series.instrument, statistic=statistic, values=out)


def write_profile_csv(path, profile: ProfileTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(PROFILE_HEADER)
        for s, v in enumerate(profile.values):
            wr.writerow([s, ProfileTable.label(s), repr(float(v))])


def read_profile_csv(path) -> ProfileTable:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != PROFILE_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(PROFILE_HEADER)}")
    body = rows[1:]
    if len(body) != SLOTS_PER_DAY:
        raise SchemaError(f"{path}: expected {SLOTS_PER_DAY} slot rows, found {len(body)}")
    values = np.zeros(SLOTS_PER_DAY)
    for i, row in enumerate(body):
        try:
            slot = int(row[0])
            values[slot] = float(row[2])
        except (IndexError, ValueError) as e:
            raise SchemaError(f"{path}: line {i + 2}: {e}") from None
        if slot != i:
            raise SchemaError(f"{path}: line {i + 2}: slot {slot} out of order")
    return ProfileTable(instrument="", statistic="", values=values)


@dataclass(frozen=True)
class HistogramTable:
    """Shared-edge histogram of a series before/after adjustment."""

    edges: np.ndarray            # (bins + 1,)
    counts_before: np.ndarray    # (bins,) int
    counts_after: np.ndarray
    excluded_zeros: bool


def export_histogram(series_before, series_after, bins: int = 60, exclude_zeros: bool = False) -> HistogramTable:
    """Histogram both series over one shared set of bin edges.

    With ``exclude_zeros``, exact zeros are dropped before binning and
    the counts sum to the positive sample size. Empty input yields
    all-zero counts over a unit range.
    """
    if bins < 1:
        raise DataError(f"bins must be >= 1, got {bins}")

    def vals(s):
        v = np.asarray(getattr(s, "values", s), dtype=np.float64)
        return v[v != 0.0] if exclude_zeros else v

    before = vals(series_before)
    after = vals(series_after)
    pooled = np.concatenate([before, after])
    if pooled.size == 0:
        edges = np.linspace(0.0, 1.0, bins + 1)
    else:
        lo, hi = float(pooled.min()), float(pooled.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    cb, _ = np.histogram(before, bins=edges)
    ca, _ = np.histogram(after, bins=edges)
    return HistogramTable(
        edges=edges,
        counts_before=cb.astype(np.int64),
        counts_after=ca.astype(np.int64),
        excluded_zeros=bool(exclude_zeros),
    )


def write_histogram_csv(path, hist: HistogramTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(HIST_HEADER)
        for i in range(hist.counts_before.size):
            wr.writerow(
                [
                    repr(float(hist.edges[i])),
                    repr(float(hist.edges[i + 1])),
                    int(hist.counts_before[i]),
                    int(hist.counts_after[i]),
                ]
            )


def read_histogram_csv(path) -> HistogramTable:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HIST_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(HIST_HEADER)}")
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: no histogram rows")
    left = np.zeros(len(body))
    right = np.zeros(len(body))
    cb = np.zeros(len(body), dtype=np.int64)
    ca = np.zeros(len(body), dtype=np.int64)
    for i, row in enumerate(body):
        try:
            left[i], right[i] = float(row[0]), float(row[1])
            cb[i], ca[i] = int(row[2]), int(row[3])
        except (IndexError, ValueError) as e:
            raise SchemaError(f"{path}: line {i + 2}: {e}") from None
    return HistogramTable(
        edges=np.append(left, right[-1]),
        counts_before=cb,
        counts_after=ca,
        excluded_zeros=False,
    )
