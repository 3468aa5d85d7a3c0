"""Command line entry: render exported artifacts to image files."""
from __future__ import annotations

import argparse
import pathlib
import sys

from . import render, schema


def _style(args) -> render.RenderStyle:
    fmt = args.format
    if fmt is None:
        suffix = pathlib.Path(args.out).suffix.lower().lstrip(".")
        fmt = suffix if suffix in ("png", "svg") else "png"
    return render.RenderStyle(fmt=fmt, dpi=args.dpi)


def _stem_name(path, prefix: str) -> str:
    stem = pathlib.Path(path).stem
    return stem[len(prefix):] if stem.startswith(prefix) else stem


def cmd_flow(args) -> int:
    doc = schema.load_flowgraph(args.input)
    report = render.render_flow(doc, args.out, _style(args))
    print(f"wrote {report.path}: {report.n_ribbons} ribbons, "
          f"{len(doc.nodes)} nodes, {report.n_self_loops} self-loops")
    return 0


def cmd_profiles(args) -> int:
    named = [(_stem_name(p, "profile_"), schema.read_profile(p))
             for p in args.inputs]
    report = render.render_profiles(named, args.out, _style(args))
    peaks = ", ".join(f"{n} peaks at {t}" for n, t in report.peak_labels.items())
    print(f"wrote {report.path}: {peaks}")
    return 0


def cmd_histograms(args) -> int:
    named = [(_stem_name(p, "hist_"), schema.read_histogram(p))
             for p in args.inputs]
    report = render.render_histograms(named, args.out, _style(args))
    print(f"wrote {report.path}: {report.n_panels} panels")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volfigs",
        description="render exported flow graphs, intraday profiles and "
                    "histograms to PNG or SVG",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--format", choices=("png", "svg"), default=None,
                       help="image format (default: from the output suffix)")
        p.add_argument("--dpi", type=int, default=150)

    p = sub.add_parser("flow", help="circular flow diagram from a flow-graph JSON")
    p.add_argument("input", help="flowgraph.json path")
    common(p)
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("profiles", help="overlaid intraday profile lines")
    p.add_argument("inputs", nargs="+", help="profile CSV paths")
    common(p)
    p.set_defaults(fn=cmd_profiles)

    p = sub.add_parser("histograms", help="before/after histogram panels")
    p.add_argument("inputs", nargs="+", help="histogram CSV paths")
    common(p)
    p.set_defaults(fn=cmd_histograms)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (schema.SchemaError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
