"""Figure rendering for flow graphs, intraday profiles and histograms.

All drawing is pure presentation: weights, counts and axis labels come
from the parsed documents verbatim. Output is deterministic for a given
input, so re-rendering a file reproduces it byte for byte apart from
embedded metadata.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import PathPatch
from matplotlib.path import Path

from .schema import FlowDoc, Histogram, Profile

plt.rcParams["svg.hashsalt"] = "volfigs"

TICK_EVERY = 48      # profile x-axis: one label every four hours


@dataclass(frozen=True)
class RenderStyle:
    fmt: str = "png"
    dpi: int = 150

    def __post_init__(self):
        if self.fmt not in ("png", "svg"):
            raise ValueError(f"unsupported output format {self.fmt!r}")


@dataclass(frozen=True)
class FlowReport:
    path: str
    n_ribbons: int
    n_self_loops: int


@dataclass(frozen=True)
class ProfileReport:
    path: str
    peak_labels: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HistReport:
    path: str
    n_panels: int


def _node_color(i: int):
    cmap = plt.get_cmap("tab10" if i < 10 else "tab20")
    return cmap(i % cmap.N)


def _savefig(fig, out_path, style: RenderStyle):
    meta = {"Software": "volfigs"} if style.fmt == "png" else {"Date": None}
    fig.savefig(out_path, format=style.fmt, dpi=style.dpi, metadata=meta)
    plt.close(fig)


def _draw_flow(ax, doc: FlowDoc, style: RenderStyle) -> tuple:
    """Circular layout; returns (ribbon count, self-loop count).

    Each ribbon takes its source node's colour, so the direction of a
    flow is readable from its hue; negative-sign edges are dashed and
    ribbon width grows with |weight|.
    """
    K = len(doc.nodes)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_xlim(-1.6, 1.6)
    ax.set_ylim(-1.6, 1.6)
    angle = {n: math.pi / 2 - 2 * math.pi * k / max(K, 1)
             for k, n in enumerate(doc.nodes)}
    pos = {n: np.array([math.cos(a), math.sin(a)]) for n, a in angle.items()}
    idx = {n: k for k, n in enumerate(doc.nodes)}

    for n in doc.nodes:
        p = pos[n]
        ax.plot(*p, marker="o", markersize=9, color=_node_color(idx[n]),
                zorder=3)
        ax.annotate(n, xy=p * 1.22, ha="center", va="center", fontsize=10)

    weights = [abs(float(e["weight"])) for e in doc.edges]
    wmax = max(weights) if weights else 0.0
    n_ribbons = 0
    for e in doc.edges:
        p0, p1 = pos[e["source"]], pos[e["target"]]
        mid = (p0 + p1) / 2.0
        chord = p1 - p0
        norm = np.hypot(*chord)
        perp = np.array([-chord[1], chord[0]]) / norm if norm > 0 else np.zeros(2)
        # opposite-direction edges bow to opposite sides of the chord
        side = 1.0 if idx[e["source"]] < idx[e["target"]] else -1.0
        ctrl = mid * 0.25 + side * 0.18 * perp
        path = Path([tuple(p0), tuple(ctrl), tuple(p1)],
                    [Path.MOVETO, Path.CURVE3, Path.CURVE3])
        w = abs(float(e["weight"]))
        lw = 0.8 + (5.0 * w / wmax if wmax > 0 else 0.0)
        ax.add_patch(PathPatch(
            path, fill=False, linewidth=lw,
            edgecolor=_node_color(idx[e["source"]]),
            linestyle="--" if e["sign"] < 0 else "-",
            alpha=0.75, zorder=2))
        n_ribbons += 1

    for s in doc.self_loops:
        p = pos[s["node"]]
        ax.annotate(f"{float(s['weight']):+.2f}", xy=p * 1.08,
                    ha="center", va="center", fontsize=8, color="0.35")
    return n_ribbons, len(doc.self_loops)


def render_flow(doc: FlowDoc, out_path, style: RenderStyle = RenderStyle()) -> FlowReport:
    fig, ax = plt.subplots(figsize=(7.0, 7.0))
    n_ribbons, n_loops = _draw_flow(ax, doc, style)
    ax.set_title(f"significant flows at level {doc.significance_level:g}")
    _savefig(fig, out_path, style)
    return FlowReport(path=str(out_path), n_ribbons=n_ribbons,
                      n_self_loops=n_loops)


def _draw_profiles(ax, named: list, style: RenderStyle) -> dict:
    """Overlay per-instrument profile lines; returns peak label per name.

    Tick labels and the peak annotation reuse the UTC strings carried in
    the file, one tick every four hours.
    """
    x = np.arange(len(named[0][1].values))
    peaks = {}
    for name, prof in named:
        ax.plot(x, prof.values, label=name, linewidth=1.4)
        k = int(np.argmax(prof.values))
        peaks[name] = prof.labels[k]
        ax.annotate(prof.labels[k], xy=(k, prof.values[k]),
                    xytext=(0, 6), textcoords="offset points",
                    ha="center", fontsize=8)
    ticks = x[::TICK_EVERY]
    ax.set_xticks(ticks)
    ax.set_xticklabels([named[0][1].labels[t] for t in ticks])
    ax.set_xlabel("time of day (UTC)")
    if len(named) > 1:
        ax.legend(frameon=False)
    return peaks


def render_profiles(named: list, out_path, style: RenderStyle = RenderStyle()) -> ProfileReport:
    """``named`` is a list of (instrument, Profile) pairs."""
    if not named:
        raise ValueError("no profiles given")
    fig, ax = plt.subplots(figsize=(9.0, 4.5))
    peaks = _draw_profiles(ax, named, style)
    _savefig(fig, out_path, style)
    return ProfileReport(path=str(out_path), peak_labels=peaks)


def render_histograms(named: list, out_path, style: RenderStyle = RenderStyle()) -> HistReport:
    """One panel per instrument: raw counts outlined, adjusted filled."""
    if not named:
        raise ValueError("no histograms given")
    n = len(named)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig, axs = plt.subplots(nrows, ncols, squeeze=False,
                            figsize=(4.5 * ncols, 3.4 * nrows))
    for k, (name, hist) in enumerate(named):
        ax = axs[k // ncols][k % ncols]
        ax.stairs(hist.before, hist.edges, label="before", linewidth=1.2)
        ax.stairs(hist.after, hist.edges, label="after", fill=True, alpha=0.4)
        ax.set_title(name, fontsize=10)
        ax.legend(frameon=False, fontsize=8)
    for k in range(n, nrows * ncols):
        axs[k // ncols][k % ncols].set_axis_off()
    fig.tight_layout()
    _savefig(fig, out_path, style)
    return HistReport(path=str(out_path), n_panels=n)
